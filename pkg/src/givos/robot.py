"""Scripted annotator emulating a human across rounds, plus the simulation loop.

The robot only sees what a user would: produced masks, guidance candidates,
and (being a benchmark construct) the ground truth.  Round one drops uniform
clicks inside each object; later rounds target the largest false-positive
and false-negative components of the selected frame.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from givos.core import AnnotationSet, ContractViolation, EngineConfig, Mark
from givos.engine import Session
from givos.metrics import jf_score

MODES = ("gt-worst", "rs1", "rs4-gt", "random")


@dataclass(frozen=True)
class RoundMeans:
    round_index: int
    mean_j: float
    mean_f: float

    @property
    def mean_jf(self) -> float:
        return (self.mean_j + self.mean_f) / 2.0


@dataclass
class MetricReport:
    mode: str
    seed: int
    num_objects: int
    rows: list[tuple[int, int, int, float, float]] = field(default_factory=list)
    round_means: list[RoundMeans] = field(default_factory=list)
    selection_trace: list[tuple[int, int, str]] = field(default_factory=list)

    @property
    def auc_jf(self) -> float:
        return trapezoid_auc([m.mean_jf for m in self.round_means])

    @property
    def auc_j(self) -> float:
        return trapezoid_auc([m.mean_j for m in self.round_means])

    def rounds_to_reach(self, threshold: float) -> int | None:
        for means in self.round_means:
            if means.mean_jf >= threshold:
                return means.round_index
        return None


def trapezoid_auc(values: list[float]) -> float:
    """Mean of the per-round curve under trapezoidal integration, in [0, 1]."""
    if not values:
        return 0.0
    if len(values) == 1:
        return float(values[0])
    total = sum((values[i] + values[i + 1]) / 2.0 for i in range(len(values) - 1))
    return float(total / (len(values) - 1))


class RobotUser:
    """Deterministic click generator driven by ground truth and guidance."""

    def __init__(self, gt_masks: np.ndarray, mode: str, seed: int, config: EngineConfig,
                 start_frame: int = 0):
        if mode not in MODES:
            raise ContractViolation(f"robot mode must be one of {MODES}, got {mode!r}")
        self.gt = np.asarray(gt_masks)
        self.mode = mode
        self.config = config
        self.start_frame = start_frame
        self.rng = np.random.Generator(np.random.Philox(key=seed))

    def annotate(self, session: Session, round_index: int) -> AnnotationSet | None:
        """Marks for the next round; None when no frame remains selectable."""
        if round_index == 1:
            return self._initial_annotation(session)
        frame = self._select_frame(session)
        if frame is None:
            return None
        marks = self._error_clicks(session, frame)
        return AnnotationSet(frame_index=frame, marks=tuple(marks))

    # -- frame selection ------------------------------------------------------

    def _frame_quality(self, session: Session, t: int) -> float:
        pred = session.labels[t].mask
        scores = []
        for k in range(1, session.num_objects + 1):
            j, f = jf_score(pred, self.gt[t], k)
            scores.append((j + f) / 2.0)
        return float(np.mean(scores))

    def _select_frame(self, session: Session) -> int | None:
        annotated = set(session.annotated_frames())
        open_frames = [t for t in range(session.num_frames) if t not in annotated]
        if self.mode == "gt-worst":
            # the oracle may re-pick an annotated frame whose result is still
            # the poorest; re-annotation replaces its marks
            return min(
                range(session.num_frames),
                key=lambda t: (self._frame_quality(session, t), t),
            )
        if not open_frames:
            return None
        if self.mode == "random":
            return int(self.rng.choice(open_frames))
        if self.mode == "rs1":
            picks = session.guide("rs1").candidates
            return picks[0][0] if picks else None
        # rs4-gt: ground truth chooses the worst of the engine's candidates
        picks = [f for f, _ in session.guide("rs4").candidates]
        if not picks:
            return None
        return min(picks, key=lambda t: (self._frame_quality(session, t), t))

    # -- click synthesis --------------------------------------------------------

    def _initial_annotation(self, session: Session) -> AnnotationSet:
        t = self.start_frame
        marks: list[Mark] = []
        for k in range(1, session.num_objects + 1):
            marks.extend(
                self._sample_in_mask(self.gt[t] == k, self.config.robot_initial_clicks, k)
            )
        if not marks:
            raise ContractViolation(f"ground truth frame {t} contains no objects")
        return AnnotationSet(frame_index=t, marks=tuple(marks))

    def _error_clicks(self, session: Session, t: int) -> list[Mark]:
        pred = session.labels[t].mask
        gt = self.gt[t]
        marks: list[Mark] = []
        for k in range(1, session.num_objects + 1):
            false_pos = (pred == k) & (gt != k)
            false_neg = (gt == k) & (pred != k)
            had_error = False
            blob = largest_component(false_pos)
            if blob is not None:
                had_error = True
                for r, c in self._sample_component(blob, self.config.robot_fp_clicks):
                    marks.append(Mark(r, c, int(gt[r, c])))
            blob = largest_component(false_neg)
            if blob is not None:
                had_error = True
                marks.extend(
                    Mark(r, c, k)
                    for r, c in self._sample_component(blob, self.config.robot_fn_clicks)
                )
            if not had_error and (gt == k).any():
                marks.append(self._confirming_click(gt == k, k))
        if not marks:
            # fully correct frame with no objects anywhere: confirm background
            ys, xs = np.nonzero(gt == 0)
            marks.append(Mark(int(ys[len(ys) // 2]), int(xs[len(xs) // 2]), 0))
        return marks

    def _sample_in_mask(self, mask: np.ndarray, count: int, object_id: int) -> list[Mark]:
        if not mask.any():
            return []
        return [Mark(r, c, object_id) for r, c in self._sample_component(mask, count)]

    def _sample_component(self, mask: np.ndarray, count: int) -> list[tuple[int, int]]:
        ys, xs = np.nonzero(mask)
        n = len(ys)
        idx = self.rng.choice(n, size=count, replace=n < count)
        return [(int(ys[i]), int(xs[i])) for i in idx]

    def _confirming_click(self, mask: np.ndarray, object_id: int) -> Mark:
        ys, xs = np.nonzero(mask)
        cy, cx = ys.mean(), xs.mean()
        if mask[int(round(cy)), int(round(cx))]:
            return Mark(int(round(cy)), int(round(cx)), object_id)
        nearest = np.argmin((ys - cy) ** 2 + (xs - cx) ** 2)
        return Mark(int(ys[nearest]), int(xs[nearest]), object_id)


def largest_component(mask: np.ndarray) -> np.ndarray | None:
    """Largest 4-connected component of a binary mask, or None when empty."""
    if not mask.any():
        return None
    labelled, count = ndimage.label(mask)  # default structure is 4-connectivity
    sizes = np.bincount(labelled.ravel())
    sizes[0] = 0
    return labelled == sizes.argmax()


def run_simulation(
    video: np.ndarray,
    gt_masks: np.ndarray,
    config: EngineConfig,
    mode: str = "gt-worst",
    rounds: int | None = None,
    seed: int = 0,
    start_frame: int = 0,
    session: Session | None = None,
    on_round=None,
) -> tuple[MetricReport, Session]:
    """Drive a full robot interaction and measure every round.

    ``rounds`` defaults to 8 on clips of 50+ frames and 4 on shorter ones.
    ``on_round(round_index, session)`` fires after each measured round.
    """
    gt = np.asarray(gt_masks)
    num_objects = int(gt.max())
    if num_objects < 1:
        raise ContractViolation("ground truth contains no objects")
    if rounds is None:
        rounds = 8 if video.shape[0] >= 50 else 4
    if session is None:
        session = Session(video, num_objects, config)
    robot = RobotUser(gt, mode, seed, config, start_frame=start_frame)
    report = MetricReport(mode=mode, seed=seed, num_objects=num_objects)

    for round_index in range(1, rounds + 1):
        annotations = robot.annotate(session, round_index)
        if annotations is None:
            break
        session.run_round(annotations)
        rule = "initial" if round_index == 1 else mode
        report.selection_trace.append((round_index, annotations.frame_index, rule))
        js, fs = [], []
        for t in range(session.num_frames):
            pred = session.labels[t].mask
            for k in range(1, num_objects + 1):
                j, f = jf_score(pred, gt[t], k)
                report.rows.append((round_index, t, k, j, f))
                js.append(j)
                fs.append(f)
        report.round_means.append(
            RoundMeans(round_index, float(np.mean(js)), float(np.mean(fs)))
        )
        if on_round is not None:
            on_round(round_index, session)
    return report, session
