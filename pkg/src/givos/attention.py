"""Reliability-based attention: transition matrices, feature transfer,
per-source reliability, and the fused object feature.

The chain per (annotated source a, target t):

    A[a->t]   = column_softmax(phi_A(F_t) @ phi_A(F_a)^T)      hw x hw
    X[t|a]    = A[a->t] @ X_a                                   transfer
    D[t|a]    = (F[t|a] - F[t|t])^2                             elementwise
    R[t|a](p) = 1 / (max_c D[t|a](p, c) + eps)
    M[t|a](p) = exp R[t|a](p) / sum_k exp R[t|a_k](p)
    G_t       = sum_i M[t|a_i] * E[t|a_i]        (per-column product)
    R_t(p)    = max_i exp(R[t|a_i](p) - 1/eps)   in [0, 1]

R_t(p) is computed as exp(max_i R - 1/eps); exp is monotone so the two forms
agree exactly, and the shifted form cannot overflow.
"""

from __future__ import annotations

import threading
from collections import OrderedDict
from dataclasses import dataclass
from typing import Callable, Hashable

import numpy as np

from givos.core import (
    ContractViolation,
    FeatureGrid,
    ReliabilityMap,
    column_softmax,
    matmul,
)
from givos.features import FeatureTransform, apply_transform


@dataclass(frozen=True)
class TransitionMatrix:
    """Column-stochastic hw x hw map from source-frame cells to target cells."""

    source_index: int
    target_index: int
    data: np.ndarray

    def __post_init__(self) -> None:
        n, m = self.data.shape
        if n != m:
            raise ContractViolation("transition matrix must be square")


@dataclass(frozen=True)
class FusionResult:
    interfused: np.ndarray  # (hw, C3)
    attention: list[ReliabilityMap]  # N maps, sum to 1 per cell
    per_source_reliability: list[ReliabilityMap]  # N maps in (0, 1/eps]
    overall: ReliabilityMap  # in [0, 1]


def transition_matrix(
    target: FeatureGrid,
    source: FeatureGrid,
    phi_a: FeatureTransform,
    temperature_scaling: bool = True,
) -> TransitionMatrix:
    """Column-stochastic correspondence from ``source`` cells to ``target`` cells.

    Entry (r, c) is the probability that source cell c maps to target cell r.
    """
    if target.shape != source.shape:
        raise ContractViolation("transition endpoints must share one grid shape")
    t = apply_transform(target, phi_a).data
    s = apply_transform(source, phi_a).data
    logits = matmul(t, s.T)
    if temperature_scaling:
        logits = logits / np.sqrt(t.shape[1])
    return TransitionMatrix(
        source_index=-1, target_index=-1, data=column_softmax(logits)
    )


def transfer(transition: TransitionMatrix, features: np.ndarray) -> np.ndarray:
    """Carry per-cell vectors through the transition: A @ X."""
    if features.ndim != 2 or transition.data.shape[1] != features.shape[0]:
        raise ContractViolation(
            f"cannot transfer {features.shape} through {transition.data.shape}"
        )
    return matmul(transition.data, features)


def reliability(
    transferred: np.ndarray, self_transferred: np.ndarray, epsilon: float
) -> np.ndarray:
    """Per-cell reliability of a transferred feature vs the self-transferred one.

    R(p) = 1 / (max_c (transferred - self)^2 + eps), in (0, 1/eps].
    """
    if epsilon <= 0:
        raise ContractViolation("epsilon must be positive")
    if transferred.shape != self_transferred.shape:
        raise ContractViolation("reliability inputs must share a shape")
    diff = transferred - self_transferred
    worst = (diff * diff).max(axis=1)
    return 1.0 / (worst + epsilon)


def attention_weights(reliabilities: np.ndarray) -> np.ndarray:
    """Softmax over sources (axis 0), stabilized; columns sum to 1."""
    shifted = reliabilities - reliabilities.max(axis=0, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=0, keepdims=True)


def fuse(
    transferred_features: list[np.ndarray],
    reliabilities: list[np.ndarray],
    epsilon: float,
    shape,
    uniform_attention: bool = False,
) -> FusionResult:
    """Blend N transferred object features by per-cell reliability attention.

    ``uniform_attention`` replaces the softmax weights with 1/N (the ablation
    baseline); the overall reliability map is unaffected by that switch.
    """
    n = len(transferred_features)
    if n == 0 or len(reliabilities) != n:
        raise ContractViolation("fuse needs N >= 1 sources with matching reliabilities")
    for feat in transferred_features:
        if feat.shape != transferred_features[0].shape:
            raise ContractViolation("transferred features must share a shape")

    # All sums run in a canonical content order so that permuting the source
    # list leaves the fused feature and overall map bit-identical.
    order = sorted(
        range(n),
        key=lambda i: (reliabilities[i].tobytes(), transferred_features[i].tobytes()),
    )
    rel_sorted = np.stack([reliabilities[i] for i in order], axis=0)  # (N, hw)
    if uniform_attention:
        weights_sorted = np.full_like(rel_sorted, 1.0 / n)
    else:
        weights_sorted = attention_weights(rel_sorted)
    fused = np.zeros_like(transferred_features[0])
    for j, i in enumerate(order):
        fused += weights_sorted[j][:, None] * transferred_features[i]
    overall = np.exp(rel_sorted.max(axis=0) - 1.0 / epsilon)

    weights = np.empty_like(weights_sorted)
    for j, i in enumerate(order):
        weights[i] = weights_sorted[j]
    return FusionResult(
        interfused=fused,
        attention=[ReliabilityMap(shape=shape, values=weights[i]) for i in range(n)],
        per_source_reliability=[
            ReliabilityMap(shape=shape, values=np.asarray(reliabilities[i], dtype=float))
            for i in range(n)
        ],
        overall=ReliabilityMap(shape=shape, values=overall),
    )


class TransitionCache:
    """LRU cache for transition matrices, keyed by (source, target).

    Concurrent readers are safe; at most one matrix is built per key (losers
    of a build race adopt the winner's entry).
    """

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ContractViolation("cache capacity must be >= 1")
        self.capacity = capacity
        self._entries: OrderedDict[Hashable, TransitionMatrix] = OrderedDict()
        self._lock = threading.Lock()

    def get(self, key: Hashable, build: Callable[[], TransitionMatrix]) -> TransitionMatrix:
        with self._lock:
            if key in self._entries:
                self._entries.move_to_end(key)
                return self._entries[key]
        built = build()
        with self._lock:
            if key not in self._entries:
                self._entries[key] = built
                while len(self._entries) > self.capacity:
                    self._entries.popitem(last=False)
            return self._entries[key]

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)
