"""Round-based interactive session: annotate, segment, propagate, guide.

Each round takes one sparse annotation set, refits the per-object heads from
annotated frames only, segments the annotated frame, then propagates
bidirectionally until another annotated frame (exclusive) or the sequence
end.  Frames outside those ranges keep their previous-round labels
untouched.  After every round each frame gets a fresh overall reliability
map and a scalar guidance score.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from givos.annotation import (
    ObjectFeature,
    SaliencyMap,
    extract_object_feature,
    make_object_projector,
    sparse_to_dense,
)
from givos.attention import TransitionCache, TransitionMatrix, fuse, reliability, transfer, transition_matrix
from givos.core import (
    AnnotationSet,
    ContractViolation,
    EngineConfig,
    FeatureGrid,
    GridShape,
    InvalidAnnotationError,
    LabelField,
    ReliabilityMap,
    cell_majority,
    cell_mean,
)
from givos.features import FrameEncoder, apply_transform, make_transforms
from givos.head import LinearHead, default_lambda, fit_ridge, predict_probability, soft_aggregate
from givos.propagation import make_mixers, neighbor_similarity, overlapped_feature


def r_score(
    overall: ReliabilityMap, mask: np.ndarray, alpha: float, num_objects: int
) -> float:
    """Guidance scalar: alpha-blend of frame-mean and object-region-mean reliability.

    The object region is the set of grid cells whose majority mask label is
    any object; with no such cells the score degenerates to the frame mean.
    """
    frame_mean = float(overall.values.mean())
    grid_labels = cell_majority(mask, overall.shape, num_objects + 1)
    object_cells = grid_labels > 0
    if not object_cells.any():
        return frame_mean
    object_mean = float(overall.values[object_cells].mean())
    return alpha * frame_mean + (1.0 - alpha) * object_mean


def select_rs1(r_scores: list[float], annotated: set[int]) -> list[int]:
    """Single lowest-score frame outside the annotated set; ties to lower index."""
    best = None
    for t, score in enumerate(r_scores):
        if t in annotated:
            continue
        if best is None or score < r_scores[best]:
            best = t
    return [] if best is None else [best]


def select_rs4(
    r_scores: list[float],
    annotated: set[int],
    total: int,
    gap_divisor: int = 10,
    count: int = 4,
) -> list[int]:
    """Greedy lowest-score picks with pairwise time distance >= ceil(T / divisor).

    Returns fewer than ``count`` frames when no further frame satisfies the
    gap against every already-selected candidate.
    """
    gap = -(-total // gap_divisor)
    order = sorted(
        (t for t in range(total) if t not in annotated), key=lambda t: (r_scores[t], t)
    )
    chosen: list[int] = []
    for t in order:
        if len(chosen) >= count:
            break
        if all(abs(t - c) >= gap for c in chosen):
            chosen.append(t)
    return chosen


@dataclass(frozen=True)
class GuidanceResult:
    mode: str  # "rs1" | "rs4"
    candidates: tuple[tuple[int, float], ...]  # (frame, r), ascending by r


@dataclass(frozen=True)
class RoundPlan:
    round_index: int
    annotated_frame: int
    forward: tuple[int, int] | None  # inclusive range, ascending
    backward: tuple[int, int] | None  # inclusive range, descending


@dataclass(frozen=True)
class RoundLogEntry:
    round_index: int
    annotated_frame: int
    num_marks: int
    forward: tuple[int, int] | None
    backward: tuple[int, int] | None
    mean_r: float

    def to_record(self) -> dict:
        return {
            "round": self.round_index,
            "annotated_frame": self.annotated_frame,
            "num_marks": self.num_marks,
            "forward": list(self.forward) if self.forward else None,
            "backward": list(self.backward) if self.backward else None,
            "mean_r": self.mean_r,
        }


@dataclass
class AnnotationRecord:
    annotations: AnnotationSet
    saliency: dict[int, SaliencyMap]
    saliency_grid: dict[int, np.ndarray]
    object_features: dict[int, ObjectFeature]


class Session:
    """Single-writer interactive segmentation state over one clip."""

    def __init__(self, video: np.ndarray, num_objects: int, config: EngineConfig):
        frames = np.asarray(video, dtype=np.float64)
        if frames.ndim == 3:
            frames = np.repeat(frames[..., None], 3, axis=3)
        if frames.ndim != 4 or frames.shape[0] < 1 or frames.shape[3] != 3:
            raise ContractViolation(f"video must be (T, H, W, 3), got {frames.shape}")
        if num_objects < 1:
            raise ContractViolation("session needs at least one query object")
        self.video = frames
        self.num_objects = num_objects
        self.config = config
        self.shape = GridShape(frames.shape[1], frames.shape[2], config.stride)

        self.encoder = FrameEncoder(config)
        self.transforms = make_transforms(config)
        self.object_projector = make_object_projector(config)
        self.mixers = make_mixers(config)

        self.records: list[AnnotationRecord] = []
        self.labels: list[LabelField | None] = [None] * self.num_frames
        self.overall_reliability: list[ReliabilityMap | None] = [None] * self.num_frames
        self.r_scores: list[float] = []
        self.heads: dict[int, LinearHead] = {}
        self.round = 0
        self.round_log: list[RoundLogEntry] = []
        self.neighbor_trace: list[tuple[int, int]] = []  # (target, neighbor) per segment

        self._features: dict[int, FeatureGrid] = {}
        self._phi_r: dict[int, np.ndarray] = {}
        self._f_self: dict[int, np.ndarray] = {}
        self._transitions = TransitionCache(config.transition_cache_size)

    # -- basic accessors ----------------------------------------------------

    @property
    def num_frames(self) -> int:
        return int(self.video.shape[0])

    def annotated_frames(self) -> list[int]:
        return [rec.annotations.frame_index for rec in self.records]

    def features(self, t: int) -> FeatureGrid:
        if t not in self._features:
            self._features[t] = self.encoder.encode(self.video[t])
        return self._features[t]

    def _phi_r_features(self, t: int) -> np.ndarray:
        if t not in self._phi_r:
            self._phi_r[t] = apply_transform(self.features(t), self.transforms["R"]).data
        return self._phi_r[t]

    def _transition(self, source: int, target: int) -> TransitionMatrix:
        def build() -> TransitionMatrix:
            return transition_matrix(
                self.features(target),
                self.features(source),
                self.transforms["A"],
                self.config.logit_temperature_scaling,
            )

        return self._transitions.get((source, target), build)

    def _self_transferred(self, t: int) -> np.ndarray:
        if t not in self._f_self:
            self._f_self[t] = transfer(self._transition(t, t), self._phi_r_features(t))
        return self._f_self[t]

    # -- per-frame reliability and fusion ------------------------------------

    def _source_reliabilities(self, t: int) -> list[np.ndarray]:
        f_self = self._self_transferred(t)
        rels = []
        for rec in self.records:
            a = rec.annotations.frame_index
            transferred = transfer(self._transition(a, t), self._phi_r_features(a))
            rels.append(reliability(transferred, f_self, self.config.epsilon))
        return rels

    def _overall(self, t: int) -> ReliabilityMap:
        rel = np.stack(self._source_reliabilities(t), axis=0)
        values = np.exp(rel.max(axis=0) - 1.0 / self.config.epsilon)
        return ReliabilityMap(shape=self.shape, values=values)

    def _fused_object_features(self, t: int) -> tuple[dict[int, np.ndarray], ReliabilityMap]:
        rels = self._source_reliabilities(t)
        fused: dict[int, np.ndarray] = {}
        overall: ReliabilityMap | None = None
        for k in range(1, self.num_objects + 1):
            transferred = [
                transfer(self._transition(rec.annotations.frame_index, t), rec.object_features[k].data)
                for rec in self.records
            ]
            result = fuse(
                transferred,
                rels,
                self.config.epsilon,
                self.shape,
                uniform_attention=not self.config.use_r_attention,
            )
            fused[k] = result.interfused
            overall = result.overall
        assert overall is not None
        return fused, overall

    # -- head fitting ---------------------------------------------------------

    def _head_inputs(
        self, t: int, fused: dict[int, np.ndarray], neighbor: int,
        neighbor_signals: dict[int, np.ndarray],
    ) -> dict[int, np.ndarray]:
        """Per-object design matrices concat(F, G, H, 1) for frame ``t``."""
        f = self.features(t)
        ones = np.ones((self.shape.hw, 1))
        inputs = {}
        if self.config.use_intersection_aware:
            sim = neighbor_similarity(f, self.features(neighbor), self.transforms["S"])
        for k in range(1, self.num_objects + 1):
            if self.config.use_intersection_aware:
                h = overlapped_feature(
                    sim, self.features(neighbor), neighbor_signals[k],
                    self.transforms["Y"], self.mixers,
                ).data
            else:
                h = np.zeros((self.shape.hw, self.config.c3))
            inputs[k] = np.concatenate([f.data, fused[k], h, ones], axis=1)
        return inputs

    def _fit_heads(self) -> None:
        """Refit every object head from scratch on all annotated frames.

        Supervision comes only from saliency pseudo-labels on annotated
        frames.  G and H treat the remaining annotated frames as sources (the
        frame itself when it is the only one): H uses the nearest remaining
        annotated frame as the neighbor, with that frame's own saliency as
        the label signal, so the head never sees its own targets through H.
        Only confidently labeled cells train the head: saliency between the
        negative and positive thresholds is seed-starved and carries no label.
        """
        per_object_rows: dict[int, list[np.ndarray]] = {k: [] for k in range(1, self.num_objects + 1)}
        per_object_targets: dict[int, list[np.ndarray]] = {k: [] for k in range(1, self.num_objects + 1)}
        for idx, rec in enumerate(self.records):
            t = rec.annotations.frame_index
            sources = [r for j, r in enumerate(self.records) if j != idx] or [rec]
            rels = self._reliabilities_from(sources, t)
            fused = {}
            for k in range(1, self.num_objects + 1):
                transferred = [
                    transfer(
                        self._transition(src.annotations.frame_index, t),
                        src.object_features[k].data,
                    )
                    for src in sources
                ]
                fused[k] = fuse(
                    transferred, rels, self.config.epsilon, self.shape,
                    uniform_attention=not self.config.use_r_attention,
                ).interfused
            fit_neighbor = min(
                sources, key=lambda src: abs(src.annotations.frame_index - t)
            )
            inputs = self._head_inputs(
                t,
                fused,
                neighbor=fit_neighbor.annotations.frame_index,
                neighbor_signals=fit_neighbor.saliency_grid,
            )
            for k in range(1, self.num_objects + 1):
                positive = rec.saliency_grid[k] >= self.config.saliency_threshold
                negative = rec.saliency_grid[k] <= self.config.saliency_negative_threshold
                confident = positive | negative
                if confident.any():
                    per_object_rows[k].append(inputs[k][confident])
                    per_object_targets[k].append(positive[confident].astype(float))
        for k in range(1, self.num_objects + 1):
            if per_object_rows[k]:
                x = np.concatenate(per_object_rows[k], axis=0)
                y = np.concatenate(per_object_targets[k])
            else:
                # every cell ambiguous: last resort, hard-threshold everything
                x = np.concatenate(
                    [
                        self._head_inputs(
                            rec.annotations.frame_index,
                            {
                                j: np.zeros((self.shape.hw, self.config.c3))
                                for j in range(1, self.num_objects + 1)
                            },
                            rec.annotations.frame_index,
                            rec.saliency_grid,
                        )[k]
                        for rec in self.records
                    ]
                )
                y = np.concatenate(
                    [
                        (rec.saliency_grid[k] >= self.config.saliency_threshold).astype(float)
                        for rec in self.records
                    ]
                )
            lam = self.config.head_lambda
            if lam is None:
                lam = default_lambda(x.shape[1])
            self.heads[k] = fit_ridge(x, y, lam, object_id=k)

    def _reliabilities_from(self, sources: list[AnnotationRecord], t: int) -> list[np.ndarray]:
        f_self = self._self_transferred(t)
        rels = []
        for rec in sources:
            a = rec.annotations.frame_index
            transferred = transfer(self._transition(a, t), self._phi_r_features(a))
            rels.append(reliability(transferred, f_self, self.config.epsilon))
        return rels

    # -- segmentation ----------------------------------------------------------

    def _segment_frame(
        self, t: int, neighbor: int, neighbor_signals: dict[int, np.ndarray]
    ) -> None:
        self.neighbor_trace.append((t, neighbor))
        fused, overall = self._fused_object_features(t)
        inputs = self._head_inputs(t, fused, neighbor, neighbor_signals)
        prob_maps = np.stack(
            [
                predict_probability(
                    self.heads[k], inputs[k], self.shape, self.config.head_sharpness
                )
                for k in range(1, self.num_objects + 1)
            ]
        )
        self.labels[t] = soft_aggregate(prob_maps, t, self.config.prob_clamp_delta)
        self.overall_reliability[t] = overall

    def _neighbor_signals_from_labels(self, n: int) -> dict[int, np.ndarray]:
        field = self.labels[n]
        assert field is not None, f"frame {n} has no labels yet"
        return {
            k: cell_mean(field.prob_maps[k - 1], self.shape)
            for k in range(1, self.num_objects + 1)
        }

    def _plan(self, a_n: int) -> RoundPlan:
        others = [t for t in self.annotated_frames() if t != a_n]
        above = [t for t in others if t > a_n]
        below = [t for t in others if t < a_n]
        stop_fwd = (min(above) - 1) if above else self.num_frames - 1
        stop_bwd = (max(below) + 1) if below else 0
        forward = (a_n + 1, stop_fwd) if a_n + 1 <= stop_fwd else None
        backward = (a_n - 1, stop_bwd) if a_n - 1 >= stop_bwd else None
        return RoundPlan(self.round, a_n, forward, backward)

    # -- the round -------------------------------------------------------------

    def run_round(self, annotations: AnnotationSet) -> RoundLogEntry:
        annotations.validate(
            self.shape.frame_height, self.shape.frame_width, self.num_objects
        )
        t = annotations.frame_index
        if not 0 <= t < self.num_frames:
            raise InvalidAnnotationError(f"frame index {t} outside video of length {self.num_frames}")

        self.round += 1
        annotations = replace(annotations, round_index=self.round)
        record = self._build_record(annotations)
        existing = [i for i, rec in enumerate(self.records) if rec.annotations.frame_index == t]
        if existing:
            self.records[existing[0]] = record  # re-annotation replaces the old marks
        else:
            self.records.append(record)

        self._fit_heads()

        self.neighbor_trace = []
        # the just-annotated frame has no trustworthy segmented neighbor (its
        # previous label is what the user flagged): its fresh saliency stands
        # in for the neighbor signal, as in the first-round bootstrap
        self._segment_frame(t, neighbor=t, neighbor_signals=record.saliency_grid)

        plan = self._plan(t)
        if plan.forward:
            for target in range(plan.forward[0], plan.forward[1] + 1):
                self._segment_frame(
                    target, target - 1, self._neighbor_signals_from_labels(target - 1)
                )
        if plan.backward:
            for target in range(plan.backward[0], plan.backward[1] - 1, -1):
                self._segment_frame(
                    target, target + 1, self._neighbor_signals_from_labels(target + 1)
                )

        self.r_scores = []
        for frame in range(self.num_frames):
            field = self.labels[frame]
            if field is None:
                raise ContractViolation(f"frame {frame} missing labels after round")
            in_plan = frame == t
            if plan.forward and plan.forward[0] <= frame <= plan.forward[1]:
                in_plan = True
            if plan.backward and plan.backward[1] <= frame <= plan.backward[0]:
                in_plan = True
            overall = self.overall_reliability[frame] if in_plan else self._overall(frame)
            self.overall_reliability[frame] = overall
            self.r_scores.append(
                r_score(overall, field.mask, self.config.alpha, self.num_objects)
            )

        entry = RoundLogEntry(
            round_index=self.round,
            annotated_frame=t,
            num_marks=len(annotations.marks),
            forward=plan.forward,
            backward=plan.backward,
            mean_r=float(np.mean(self.r_scores)),
        )
        self.round_log.append(entry)
        return entry

    def _build_record(self, annotations: AnnotationSet) -> AnnotationRecord:
        t = annotations.frame_index
        frame = self.video[t]
        feats = self.features(t)
        saliency, saliency_grid, object_features = {}, {}, {}
        for k in range(1, self.num_objects + 1):
            sal = sparse_to_dense(annotations, frame, k, self.config)
            saliency[k] = sal
            saliency_grid[k] = sal.to_grid(self.shape)
            object_features[k] = extract_object_feature(feats, sal, self.object_projector)
        return AnnotationRecord(annotations, saliency, saliency_grid, object_features)

    # -- guidance ---------------------------------------------------------------

    def guide(self, mode: str) -> GuidanceResult:
        if self.round < 1:
            raise ContractViolation("guidance needs at least one completed round")
        annotated = set(self.annotated_frames())
        if mode == "rs1":
            picks = select_rs1(self.r_scores, annotated)
        elif mode == "rs4":
            picks = select_rs4(
                self.r_scores,
                annotated,
                self.num_frames,
                self.config.rs4_min_gap_divisor,
                self.config.rs4_count,
            )
        else:
            raise ContractViolation(f"unknown guidance mode {mode!r}")
        ordered = sorted(picks, key=lambda f: (self.r_scores[f], f))
        return GuidanceResult(
            mode=mode, candidates=tuple((f, self.r_scores[f]) for f in ordered)
        )
