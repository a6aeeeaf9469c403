"""Intersection-aware propagation from an already-segmented neighbor frame.

S_t = exp(-(phi_S(F_t) - phi_S(F_n))^2) flags cells whose appearance agrees
with the neighbor; the neighbor's label signal is embedded together with
phi_Y(F_n) and combined with S_t into the overlapped object feature H_t.
Both combiners are per-cell affine maps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from givos.core import (
    ContractViolation,
    EngineConfig,
    FeatureGrid,
    derive_key,
    matmul,
    philox_rng,
    seeded_matrix,
)
from givos.features import FeatureTransform, apply_transform


@dataclass(frozen=True)
class PropagationMixers:
    """Seeded affine combiners: label embed (C2+1 -> C3), overlap (C2+C3 -> C3)."""

    label_weight: np.ndarray
    label_bias: np.ndarray
    overlap_weight: np.ndarray
    overlap_bias: np.ndarray


def make_mixers(config: EngineConfig) -> PropagationMixers:
    label_w = seeded_matrix(
        config.c2 + 1, config.c3, derive_key(config.rng_seed, "mixer:label:weight")
    )
    overlap_w = seeded_matrix(
        config.c2 + config.c3, config.c3, derive_key(config.rng_seed, "mixer:overlap:weight")
    )
    label_b = philox_rng(config.rng_seed, "mixer:label:bias").standard_normal(config.c3) * 0.1
    overlap_b = philox_rng(config.rng_seed, "mixer:overlap:bias").standard_normal(config.c3) * 0.1
    return PropagationMixers(label_w, label_b, overlap_w, overlap_b)


def neighbor_similarity(
    target: FeatureGrid, neighbor: FeatureGrid, phi_s: FeatureTransform
) -> FeatureGrid:
    """Entry-wise similarity in (0, 1]; exactly 1 where transformed features agree."""
    if target.shape != neighbor.shape:
        raise ContractViolation("neighbor similarity needs matching grid shapes")
    t = apply_transform(target, phi_s).data
    n = apply_transform(neighbor, phi_s).data
    diff = t - n
    return FeatureGrid(shape=target.shape, data=np.exp(-(diff * diff)))


def label_signal_embedding(
    neighbor: FeatureGrid,
    label_grid: np.ndarray,
    phi_y: FeatureTransform,
    mixers: PropagationMixers,
) -> np.ndarray:
    """Embed the neighbor's per-object label signal with its appearance."""
    if label_grid.shape != (neighbor.shape.hw,):
        raise ContractViolation(
            f"label signal must be ({neighbor.shape.hw},), got {label_grid.shape}"
        )
    y_feat = apply_transform(neighbor, phi_y).data
    stacked = np.concatenate([y_feat, label_grid[:, None]], axis=1)
    return matmul(stacked, mixers.label_weight) + mixers.label_bias


def overlapped_feature(
    similarity: FeatureGrid,
    neighbor: FeatureGrid,
    label_grid: np.ndarray,
    phi_y: FeatureTransform,
    mixers: PropagationMixers,
) -> FeatureGrid:
    """H_t for one object: combine S_t with the embedded neighbor label signal."""
    embedded = label_signal_embedding(neighbor, label_grid, phi_y, mixers)
    stacked = np.concatenate([similarity.data, embedded], axis=1)
    if stacked.shape[1] != mixers.overlap_weight.shape[0]:
        raise ContractViolation(
            f"overlap mixer expects {mixers.overlap_weight.shape[0]} inputs, "
            f"got {stacked.shape[1]}"
        )
    data = matmul(stacked, mixers.overlap_weight) + mixers.overlap_bias
    return FeatureGrid(shape=similarity.shape, data=data)
