import math

import numpy as np
import pytest

from givos.core import ContractViolation, EngineConfig, FeatureGrid, GridShape
from givos.features import FeatureTransform
from givos.propagation import (
    PropagationMixers,
    label_signal_embedding,
    make_mixers,
    neighbor_similarity,
    overlapped_feature,
)

SHAPE = GridShape(8, 8, 4)  # hw = 4


def ident(c):
    return FeatureTransform("S", np.eye(c), np.zeros(c))


def rand_grid(seed, channels=3):
    rng = np.random.Generator(np.random.Philox(key=seed))
    return FeatureGrid(shape=SHAPE, data=rng.standard_normal((SHAPE.hw, channels)))


class TestNeighborSimilarity:
    def test_identical_neighbor_gives_ones(self):
        f = rand_grid(1)
        s = neighbor_similarity(f, f, ident(3))
        assert np.array_equal(s.data, np.ones_like(f.data))

    def test_unit_difference(self):
        base = FeatureGrid(shape=SHAPE, data=np.zeros((4, 2)))
        moved_data = np.zeros((4, 2))
        moved_data[2, 1] = 1.0
        moved = FeatureGrid(shape=SHAPE, data=moved_data)
        s = neighbor_similarity(base, moved, ident(2))
        assert s.data[2, 1] == pytest.approx(math.exp(-1.0), abs=1e-12)
        assert s.data[0, 0] == 1.0

    def test_range(self):
        s = neighbor_similarity(rand_grid(2), rand_grid(3), ident(3))
        assert np.all(s.data > 0)
        assert np.all(s.data <= 1.0)

    def test_scalar_oracle(self):
        rng = np.random.Generator(np.random.Philox(key=4))
        w = rng.standard_normal((3, 2))
        b = rng.standard_normal(2)
        phi = FeatureTransform("S", w, b)
        ft, fn = rand_grid(5), rand_grid(6)
        s = neighbor_similarity(ft, fn, phi)
        for p in range(SHAPE.hw):
            for j in range(2):
                a = sum(ft.data[p, c] * w[c, j] for c in range(3)) + b[j]
                bb = sum(fn.data[p, c] * w[c, j] for c in range(3)) + b[j]
                assert s.data[p, j] == pytest.approx(math.exp(-((a - bb) ** 2)), abs=1e-12)

    def test_shape_mismatch(self):
        other = GridShape(12, 8, 4)
        f1 = rand_grid(7)
        rng = np.random.Generator(np.random.Philox(key=8))
        f2 = FeatureGrid(shape=other, data=rng.standard_normal((other.hw, 3)))
        with pytest.raises(ContractViolation):
            neighbor_similarity(f1, f2, ident(3))


def zero_bias_mixers(c2, c3, seed=0):
    rng = np.random.Generator(np.random.Philox(key=seed))
    return PropagationMixers(
        label_weight=rng.standard_normal((c2 + 1, c3)),
        label_bias=np.zeros(c3),
        overlap_weight=rng.standard_normal((c2 + c3, c3)),
        overlap_bias=np.zeros(c3),
    )


class TestOverlappedFeature:
    def test_zero_label_depends_only_on_appearance(self):
        mixers = zero_bias_mixers(3, 4)
        fn = rand_grid(9)
        zero = np.zeros(SHAPE.hw)
        e1 = label_signal_embedding(fn, zero, ident(3), mixers)
        e2 = label_signal_embedding(fn, zero.copy(), ident(3), mixers)
        assert np.array_equal(e1, e2)
        # changing the label signal changes the embedding
        e3 = label_signal_embedding(fn, np.ones(SHAPE.hw), ident(3), mixers)
        assert not np.allclose(e1, e3)

    def test_identical_frames_structural(self):
        # S_t == 1 everywhere: H reduces to a fixed affine image of the
        # embedded label signal plus the all-ones block
        mixers = zero_bias_mixers(3, 4, seed=1)
        f = rand_grid(10)
        sim = neighbor_similarity(f, f, ident(3))
        assert np.all(sim.data == 1.0)
        y = np.linspace(0, 1, SHAPE.hw)
        h = overlapped_feature(sim, f, y, ident(3), mixers)
        embedded = label_signal_embedding(f, y, ident(3), mixers)
        expected = (
            np.concatenate([np.ones((SHAPE.hw, 3)), embedded], axis=1)
            @ mixers.overlap_weight
        )
        assert np.allclose(h.data, expected)

    def test_scalar_oracle(self):
        cfg = EngineConfig(c1=3, c2=3, c3=4, rng_seed=5)
        mixers = make_mixers(cfg)
        phi = ident(3)
        ft, fn = rand_grid(11), rand_grid(12)
        sim = neighbor_similarity(ft, fn, phi)
        rng = np.random.Generator(np.random.Philox(key=13))
        y = rng.uniform(0, 1, SHAPE.hw)
        h = overlapped_feature(sim, fn, y, phi, mixers)
        for p in range(SHAPE.hw):
            yrow = list(fn.data[p] @ phi.weight + phi.bias) + [y[p]]
            emb = [
                sum(yrow[i] * mixers.label_weight[i, j] for i in range(4))
                + mixers.label_bias[j]
                for j in range(4)
            ]
            row = list(sim.data[p]) + emb
            for j in range(4):
                want = (
                    sum(row[i] * mixers.overlap_weight[i, j] for i in range(7))
                    + mixers.overlap_bias[j]
                )
                assert h.data[p, j] == pytest.approx(want, abs=1e-12)

    def test_joint_superposition_with_zero_bias(self):
        mixers = zero_bias_mixers(3, 4, seed=2)
        phi = ident(3)
        f1, f2, fn = rand_grid(14), rand_grid(15), rand_grid(16)
        y1 = np.full(SHAPE.hw, 0.25)
        y2 = np.full(SHAPE.hw, 0.5)
        s1 = neighbor_similarity(f1, fn, phi)
        s2 = neighbor_similarity(f2, fn, phi)
        h1 = overlapped_feature(s1, fn, y1, phi, mixers).data
        h2 = overlapped_feature(s2, fn, y2, phi, mixers).data
        combined_sim = FeatureGrid(shape=SHAPE, data=s1.data + s2.data)
        h_sum = overlapped_feature(combined_sim, fn, y1 + y2, phi, mixers).data
        # linear in (S, label signal) jointly, up to one duplicated copy of
        # the shared phi_Y(F_n) appearance block
        appearance = overlapped_feature(
            FeatureGrid(shape=SHAPE, data=np.zeros_like(s1.data)),
            fn,
            np.zeros(SHAPE.hw),
            phi,
            mixers,
        ).data
        assert np.allclose(h_sum + appearance, h1 + h2, atol=1e-10)

    def test_mixers_deterministic(self):
        cfg = EngineConfig(rng_seed=9)
        m1, m2 = make_mixers(cfg), make_mixers(cfg)
        assert np.array_equal(m1.label_weight, m2.label_weight)
        assert np.array_equal(m1.overlap_bias, m2.overlap_bias)

    def test_label_grid_shape_checked(self):
        mixers = zero_bias_mixers(3, 4)
        with pytest.raises(ContractViolation):
            label_signal_embedding(rand_grid(17), np.zeros(3), ident(3), mixers)
