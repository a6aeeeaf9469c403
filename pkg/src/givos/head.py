"""Per-session linear segmentation head and the soft aggregation scheme.

Each object gets a ridge regressor over per-cell inputs concat(F, G, H, 1),
fit on annotated frames only and refit from scratch every round.  Scores are
squashed through a sharpened logistic; per-object probabilities are merged
with normalized odds, the background taking the residual mass.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from givos.core import ContractViolation, GridShape, LabelField, upsample_bilinear


@dataclass(frozen=True)
class LinearHead:
    """Ridge weights for one object; the bias is the last coefficient."""

    object_id: int
    weights: np.ndarray
    regularizer: float
    training_cells: int
    residual: float
    prior_only: bool  # single-class targets forced the fallback head

    def scores(self, inputs: np.ndarray) -> np.ndarray:
        if inputs.shape[1] != self.weights.shape[0]:
            raise ContractViolation(
                f"head expects {self.weights.shape[0]} inputs, got {inputs.shape[1]}"
            )
        return inputs @ self.weights


def default_lambda(dim: int) -> float:
    return 0.01 * dim


def fit_ridge(inputs: np.ndarray, targets: np.ndarray, regularizer: float,
              object_id: int = 0) -> LinearHead:
    """Closed-form ridge fit; the bias column (the last one) is unpenalized.

    With single-class targets the normal equations are still solvable but
    pointless, so the head degrades to bias = class rate and flags itself.
    """
    if inputs.ndim != 2 or targets.shape != (inputs.shape[0],):
        raise ContractViolation("ridge fit needs (n, d) inputs and (n,) targets")
    if regularizer <= 0:
        raise ContractViolation("regularizer must be positive")
    n, d = inputs.shape
    y = targets.astype(np.float64)
    if np.all(y == y[0]):
        weights = np.zeros(d)
        weights[-1] = float(y[0])
        return LinearHead(object_id, weights, regularizer, n, 0.0, prior_only=True)

    reg = np.eye(d) * regularizer
    reg[-1, -1] = 0.0  # free intercept: lambda -> inf leaves bias = mean target
    normal = inputs.T @ inputs + reg
    rhs = inputs.T @ y
    weights = cho_solve(cho_factor(normal), rhs)
    residual = float(np.mean((inputs @ weights - y) ** 2))
    return LinearHead(object_id, weights, regularizer, n, residual, prior_only=False)


def predict_probability(
    head: LinearHead,
    inputs: np.ndarray,
    shape: GridShape,
    sharpness: float,
) -> np.ndarray:
    """Full-resolution probability map from per-cell head scores.

    p(cell) = sigmoid(sharpness * (score - 0.5)), computed on the grid and
    bilinearly upsampled to frame resolution.
    """
    scores = head.scores(inputs)
    probs = 1.0 / (1.0 + np.exp(-sharpness * (scores - 0.5)))
    grid = probs.reshape(shape.grid_h, shape.grid_w)
    return np.clip(upsample_bilinear(grid, shape), 0.0, 1.0)


def soft_aggregate(
    prob_maps: np.ndarray, frame_index: int, clamp_delta: float = 1e-6
) -> LabelField:
    """Normalized-odds merge of K object probability maps plus background.

    q_k = odds_k / (1 + sum odds); q_0 = 1 / (1 + sum odds).  The mask is the
    argmax over (q_0, q_1, ..., q_K); exact ties go to the background first,
    then to the lower object id.
    """
    if prob_maps.ndim != 3 or prob_maps.shape[0] < 1:
        raise ContractViolation("soft_aggregate needs (K, H, W) probabilities, K >= 1")
    p = np.clip(prob_maps.astype(np.float64), clamp_delta, 1.0 - clamp_delta)
    odds = p / (1.0 - p)
    denom = 1.0 + odds.sum(axis=0)
    aggregated = odds / denom
    background = 1.0 / denom
    stacked = np.concatenate([background[None], aggregated], axis=0)
    mask = stacked.argmax(axis=0)
    return LabelField(frame_index=frame_index, prob_maps=aggregated, mask=mask)
