import numpy as np
import pytest

from givos.core import (
    AnnotationSet,
    ContractViolation,
    EngineConfig,
    GridShape,
    Mark,
    ReliabilityMap,
)
from givos.engine import Session, r_score, select_rs1, select_rs4
from givos.synth import SyntheticSpec, generate_clip

CFG = EngineConfig(stride=8, c1=24, c2=8, c3=12, rng_seed=7)


def clip(seed=0, frames=8, objects=1):
    video, masks = generate_clip(
        SyntheticSpec(num_frames=frames, height=32, width=32, num_objects=objects, seed=seed)
    )
    return video, masks


def center_marks(mask, num_objects, background_too=True):
    marks = []
    for k in range(1, num_objects + 1):
        ys, xs = np.nonzero(mask == k)
        marks.append(Mark(int(ys.mean()), int(xs.mean()), k))
    if background_too:
        ys, xs = np.nonzero(mask == 0)
        marks.append(Mark(int(ys[0]), int(xs[0]), 0))
    return tuple(marks)


class TestRScore:
    SHAPE = GridShape(4, 4, 2)

    def test_all_ones_gives_one(self):
        rel = ReliabilityMap(self.SHAPE, np.ones(4))
        mask = np.zeros((4, 4), dtype=int)
        mask[:2, :2] = 1
        for alpha in (0.0, 0.5, 1.0):
            assert r_score(rel, mask, alpha, 1) == pytest.approx(1.0)

    def test_worked_example(self):
        # frame mean 0.8, object mean 0.4, alpha 0.5 -> 0.6
        rel = ReliabilityMap(self.SHAPE, np.array([0.4, 1.0, 0.9, 0.9]))
        mask = np.zeros((4, 4), dtype=int)
        mask[:2, :2] = 1  # cell 0 is the only object cell
        assert r_score(rel, mask, 0.5, 1) == pytest.approx(0.6, abs=1e-12)

    def test_alpha_one_frame_mean(self):
        rel = ReliabilityMap(self.SHAPE, np.array([0.1, 0.2, 0.3, 0.4]))
        mask = np.zeros((4, 4), dtype=int)
        mask[:2, :2] = 1
        assert r_score(rel, mask, 1.0, 1) == pytest.approx(0.25)

    def test_alpha_zero_object_mean(self):
        rel = ReliabilityMap(self.SHAPE, np.array([0.1, 0.2, 0.3, 0.4]))
        mask = np.zeros((4, 4), dtype=int)
        mask[:2, :2] = 1
        assert r_score(rel, mask, 0.0, 1) == pytest.approx(0.1)

    def test_empty_object_fallback(self):
        rel = ReliabilityMap(self.SHAPE, np.array([0.1, 0.2, 0.3, 0.4]))
        mask = np.zeros((4, 4), dtype=int)
        for alpha in (0.0, 0.5, 1.0):
            assert r_score(rel, mask, alpha, 1) == pytest.approx(0.25)


class TestSelection:
    def test_rs1_argmin_with_tie_to_lower_index(self):
        scores = [0.5, 0.2, 0.2, 0.9]
        assert select_rs1(scores, set()) == [1]
        assert select_rs1(scores, {1}) == [2]

    def test_rs1_all_annotated(self):
        assert select_rs1([0.5, 0.6], {0, 1}) == []

    def test_rs4_greedy_hand_trace(self):
        # T = 20 so the minimum gap is 2; lowest score first, then the next
        # lowest still satisfying the gap against all picks
        scores = [0.9] * 20
        scores[1] = 0.1
        scores[6] = 0.05
        picks = select_rs4(scores, set(), total=20)
        assert picks == [6, 1, 3, 8]

    def test_rs4_gap_from_total(self):
        # T = 50 -> minimum pairwise gap 5
        scores = list(np.linspace(0, 1, 50))
        picks = select_rs4(scores, set(), total=50)
        assert len(picks) == 4
        for i, a in enumerate(picks):
            for b in picks[i + 1 :]:
                assert abs(a - b) >= 5

    def test_rs4_excludes_annotated(self):
        scores = [0.0, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9]
        picks = select_rs4(scores, {0}, total=10)
        assert 0 not in picks

    def test_rs4_fewer_when_constrained(self):
        scores = [0.1, 0.2, 0.3]
        picks = select_rs4(scores, set(), total=3, gap_divisor=1)  # gap = 3
        assert picks == [0]


class TestSingleFrame:
    def test_t1_video_round(self):
        video, masks = clip(seed=1, frames=1)
        session = Session(video, 1, CFG)
        entry = session.run_round(
            AnnotationSet(frame_index=0, marks=center_marks(masks[0], 1))
        )
        assert entry.forward is None and entry.backward is None
        assert session.labels[0] is not None
        # self-annotation: overall reliability is exactly 1 everywhere
        assert session.r_scores[0] == pytest.approx(1.0, abs=1e-9)


class TestRoundPlan:
    def test_adjacent_annotation_empty_backward(self):
        video, masks = clip(seed=2, frames=8)
        session = Session(video, 1, CFG)
        session.run_round(AnnotationSet(frame_index=3, marks=center_marks(masks[3], 1)))
        entry = session.run_round(
            AnnotationSet(frame_index=4, marks=center_marks(masks[4], 1))
        )
        assert entry.backward is None
        assert entry.forward == (5, 7)

    def test_untouched_frames_bit_identical(self):
        video, masks = clip(seed=3, frames=10)
        session = Session(video, 1, CFG)
        session.run_round(AnnotationSet(frame_index=7, marks=center_marks(masks[7], 1)))
        before = {t: session.labels[t].mask.copy() for t in range(10)}
        entry = session.run_round(
            AnnotationSet(frame_index=2, marks=center_marks(masks[2], 1))
        )
        # propagation stops below the round-1 frame: frames 7..9 keep their bits
        assert entry.forward == (3, 6)
        for t in (7, 8, 9):
            assert np.array_equal(session.labels[t].mask, before[t])

    def test_propagation_causality_trace(self):
        video, masks = clip(seed=4, frames=8)
        session = Session(video, 1, CFG)
        session.run_round(AnnotationSet(frame_index=3, marks=center_marks(masks[3], 1)))
        trace = dict(session.neighbor_trace)
        assert trace[3] == 3  # bootstrap reads its own signal
        for t in range(4, 8):
            assert trace[t] == t - 1
        for t in range(0, 3):
            assert trace[t] == t + 1

    def test_r_scores_in_unit_interval_every_round(self):
        video, masks = clip(seed=5, frames=8, objects=2)
        session = Session(video, 2, CFG)
        for t in (0, 5):
            session.run_round(AnnotationSet(frame_index=t, marks=center_marks(masks[t], 2)))
            assert len(session.r_scores) == 8
            assert all(0.0 <= r <= 1.0 for r in session.r_scores)

    def test_annotated_frame_scores_highest(self):
        video, masks = clip(seed=6, frames=8)
        session = Session(video, 1, CFG)
        session.run_round(AnnotationSet(frame_index=4, marks=center_marks(masks[4], 1)))
        assert session.r_scores[4] == pytest.approx(1.0, abs=1e-9)
        assert session.r_scores[4] == max(session.r_scores)


class TestReannotation:
    def test_replaces_previous_marks(self):
        video, masks = clip(seed=7, frames=6)
        session = Session(video, 1, CFG)
        session.run_round(AnnotationSet(frame_index=2, marks=center_marks(masks[2], 1)))
        session.run_round(AnnotationSet(frame_index=2, marks=center_marks(masks[2], 1)))
        assert session.annotated_frames() == [2]
        assert session.round == 2


class TestGuide:
    def test_requires_completed_round(self):
        video, _ = clip(seed=8, frames=6)
        session = Session(video, 1, CFG)
        with pytest.raises(ContractViolation):
            session.guide("rs1")

    def test_rs1_and_rs4_exclude_annotated(self):
        video, masks = clip(seed=9, frames=12)
        session = Session(video, 1, CFG)
        session.run_round(AnnotationSet(frame_index=5, marks=center_marks(masks[5], 1)))
        for mode in ("rs1", "rs4"):
            result = session.guide(mode)
            frames = [f for f, _ in result.candidates]
            assert 5 not in frames
            rs = [r for _, r in result.candidates]
            assert rs == sorted(rs)

    def test_unknown_mode(self):
        video, masks = clip(seed=10, frames=6)
        session = Session(video, 1, CFG)
        session.run_round(AnnotationSet(frame_index=0, marks=center_marks(masks[0], 1)))
        with pytest.raises(ContractViolation):
            session.guide("rs2")

    def test_all_annotated_returns_empty(self):
        video, masks = clip(seed=11, frames=2)
        session = Session(video, 1, CFG)
        for t in range(2):
            session.run_round(AnnotationSet(frame_index=t, marks=center_marks(masks[t], 1)))
        assert session.guide("rs1").candidates == ()


class TestDeterminism:
    def test_identical_runs_identical_state(self):
        video, masks = clip(seed=12, frames=8, objects=2)

        def run():
            session = Session(video, 2, CFG)
            for t in (1, 6):
                session.run_round(
                    AnnotationSet(frame_index=t, marks=center_marks(masks[t], 2))
                )
            return session

        s1, s2 = run(), run()
        assert s1.r_scores == s2.r_scores
        assert s1.round_log == s2.round_log
        for t in range(8):
            assert np.array_equal(s1.labels[t].mask, s2.labels[t].mask)
            assert np.array_equal(s1.labels[t].prob_maps, s2.labels[t].prob_maps)


class TestDirectionSymmetry:
    def test_palindromic_clip_mirrors_labels(self):
        video, masks = clip(seed=13, frames=3)
        pal = np.stack([video[0], video[1], video[2], video[1], video[0]])
        session = Session(pal, 1, CFG)
        session.run_round(AnnotationSet(frame_index=2, marks=center_marks(masks[2], 1)))
        for d in (1, 2):
            assert np.array_equal(session.labels[2 + d].mask, session.labels[2 - d].mask)
            assert np.array_equal(
                session.labels[2 + d].prob_maps, session.labels[2 - d].prob_maps
            )


class TestValidation:
    def test_object_id_beyond_k(self):
        video, _ = clip(seed=14, frames=4)
        session = Session(video, 1, CFG)
        from givos.core import InvalidAnnotationError

        with pytest.raises(InvalidAnnotationError):
            session.run_round(AnnotationSet(frame_index=0, marks=(Mark(1, 1, 5),)))

    def test_frame_out_of_range(self):
        video, masks = clip(seed=15, frames=4)
        session = Session(video, 1, CFG)
        from givos.core import InvalidAnnotationError

        with pytest.raises(InvalidAnnotationError):
            session.run_round(AnnotationSet(frame_index=9, marks=(Mark(1, 1, 1),)))
