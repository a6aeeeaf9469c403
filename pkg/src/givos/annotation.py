"""Turns sparse marks into dense saliency maps and per-object features.

The sparse-to-dense step is a geodesic distance transform: path cost is the
Euclidean step length plus a color-contrast penalty, so saliency follows
image edges instead of leaking across them.  Marks of other objects and of
the background act as negative seeds for the query object.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import dijkstra

from givos.core import (
    AnnotationSet,
    ContractViolation,
    EngineConfig,
    FeatureGrid,
    GridShape,
    InvalidAnnotationError,
    cell_mean,
    derive_key,
    matmul,
    seeded_matrix,
)
from givos.features import as_rgb


@dataclass(frozen=True)
class SaliencyMap:
    """Dense [0, 1] support field for one object on one frame."""

    frame_index: int
    object_id: int
    values: np.ndarray  # (H, W)

    def __post_init__(self) -> None:
        if self.values.ndim != 2:
            raise ContractViolation("saliency values must be (H, W)")
        if self.values.min() < 0.0 or self.values.max() > 1.0:
            raise ContractViolation("saliency values must lie in [0, 1]")

    def to_grid(self, shape: GridShape) -> np.ndarray:
        return cell_mean(self.values, shape)


@dataclass(frozen=True)
class ObjectFeature:
    """(hw, C3) encoding of one query object on an annotated frame."""

    frame_index: int
    object_id: int
    data: np.ndarray

    def __post_init__(self) -> None:
        if self.data.ndim != 2 or not np.all(np.isfinite(self.data)):
            raise ContractViolation("object feature must be a finite 2-D matrix")


def _pixel_graph(rgb: np.ndarray, color_weight: float, contrast_floor: float) -> csr_matrix:
    """8-connected pixel graph; edge cost = step length + salient color contrast.

    Contrast below ``contrast_floor`` costs nothing beyond the step, so fine
    texture inside a region stays cheap and only real edges pay the penalty.
    """
    h, w = rgb.shape[:2]
    idx = np.arange(h * w).reshape(h, w)
    sqrt2 = math.sqrt(2.0)
    rows, cols, weights = [], [], []
    for dy, dx, step in ((0, 1, 1.0), (1, 0, 1.0), (1, 1, sqrt2), (1, -1, sqrt2)):
        ys = slice(0, h - dy)
        yd = slice(dy, h)
        if dx >= 0:
            xs, xd = slice(0, w - dx), slice(dx, w)
        else:
            xs, xd = slice(-dx, w), slice(0, w + dx)
        src = idx[ys, xs].ravel()
        dst = idx[yd, xd].ravel()
        diff = np.linalg.norm(rgb[ys, xs].reshape(-1, 3) - rgb[yd, xd].reshape(-1, 3), axis=1)
        rows.append(src)
        cols.append(dst)
        weights.append(step + color_weight * np.maximum(diff - contrast_floor, 0.0))
    return csr_matrix(
        (np.concatenate(weights), (np.concatenate(rows), np.concatenate(cols))),
        shape=(h * w, h * w),
    )


def geodesic_distance(
    rgb: np.ndarray,
    seeds: list[tuple[int, int]],
    color_weight: float,
    contrast_floor: float = 0.0,
) -> np.ndarray:
    """Min geodesic distance from every pixel to the nearest seed pixel."""
    h, w = rgb.shape[:2]
    graph = _pixel_graph(rgb, color_weight, contrast_floor)
    indices = [r * w + c for r, c in seeds]
    dist = dijkstra(graph, directed=False, indices=indices, min_only=True)
    return dist.reshape(h, w)


def sparse_to_dense(
    annotations: AnnotationSet,
    image: np.ndarray,
    object_id: int,
    config: EngineConfig,
) -> SaliencyMap:
    """Geodesic soft segmentation of one object from sparse marks.

    saliency(x) = sigmoid(beta * (d_neg(x) - d_pos(x))).  d_pos is the true
    geodesic cost to the nearest positive mark; d_neg is capped at the image
    diagonal, which doubles as its value when no negative seeds exist: the
    diagonal acts as an always-present virtual background seed, so a pixel
    whose cheapest path into the object crosses strong edges reads as
    background even without an explicit negative click.  Mark pixels are
    pinned to their labels (1 for positives, 0 for non-positives) afterwards.
    """
    rgb = as_rgb(image)
    h, w = rgb.shape[:2]
    positives = [(m.row, m.col) for m in annotations.marks if m.object_id == object_id]
    negatives = [(m.row, m.col) for m in annotations.marks if m.object_id != object_id]
    if not positives and not negatives:
        raise InvalidAnnotationError("annotation set has no usable marks")

    diagonal = math.hypot(h, w)
    beta = config.saliency_beta_scale / diagonal
    color_weight = (
        config.geodesic_color_weight
        if config.geodesic_color_weight is not None
        else 4.0 * diagonal
    )

    floor = config.geodesic_contrast_floor
    d_pos = (
        geodesic_distance(rgb, positives, color_weight, floor)
        if positives
        else np.full((h, w), diagonal)
    )
    d_neg = (
        np.minimum(geodesic_distance(rgb, negatives, color_weight, floor), diagonal)
        if negatives
        else np.full((h, w), diagonal)
    )

    values = 1.0 / (1.0 + np.exp(-beta * (d_neg - d_pos)))
    for r, c in negatives:
        values[r, c] = 0.0
    for r, c in positives:
        values[r, c] = 1.0
    return SaliencyMap(frame_index=annotations.frame_index, object_id=object_id, values=values)


def make_object_projector(config: EngineConfig) -> np.ndarray:
    """Seeded (2*C1 + 1, C3) matrix mixing frame feature and saliency."""
    return seeded_matrix(
        2 * config.c1 + 1, config.c3, derive_key(config.rng_seed, "object_projector")
    )


def extract_object_feature(
    features: FeatureGrid, saliency: SaliencyMap, projector: np.ndarray
) -> ObjectFeature:
    """Per cell: E(p) = concat(F(p), s(p), s(p) * F(p)) @ projector.

    The multiplicative block carries "frame feature where the object is";
    the saliency scalar enters once on its own so pure support also counts.
    """
    c1 = features.channels
    if projector.shape[0] != 2 * c1 + 1:
        raise ContractViolation(
            f"projector expects {projector.shape[0]} inputs, features give {2 * c1 + 1}"
        )
    s = saliency.to_grid(features.shape)
    stacked = np.concatenate(
        [features.data, s[:, None], s[:, None] * features.data], axis=1
    )
    return ObjectFeature(
        frame_index=saliency.frame_index,
        object_id=saliency.object_id,
        data=matmul(stacked, projector),
    )
