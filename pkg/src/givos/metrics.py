"""Segmentation quality metrics: region similarity J and boundary accuracy F."""

from __future__ import annotations

import math

import numpy as np
from scipy.ndimage import binary_erosion, distance_transform_edt

from givos.core import ContractViolation

_CROSS = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def region_similarity(pred: np.ndarray, gt: np.ndarray, object_id: int) -> float:
    """Intersection over union of one object's binary masks.

    Both masks empty counts as a perfect 1.0.
    """
    if pred.shape != gt.shape:
        raise ContractViolation(f"mask resolutions differ: {pred.shape} vs {gt.shape}")
    p = pred == object_id
    g = gt == object_id
    union = np.logical_or(p, g).sum()
    if union == 0:
        return 1.0
    return float(np.logical_and(p, g).sum() / union)


def boundary_pixels(mask: np.ndarray) -> np.ndarray:
    """Mask pixels with a 4-neighbor outside the mask; image borders count."""
    m = mask.astype(bool)
    if not m.any():
        return m
    return m & ~binary_erosion(m, structure=_CROSS, border_value=0)


def default_boundary_tolerance(height: int, width: int) -> int:
    """0.8% of the image diagonal, rounded up."""
    return math.ceil(0.008 * math.hypot(height, width))


def contour_accuracy(
    pred: np.ndarray, gt: np.ndarray, object_id: int, tolerance: int | None = None
) -> float:
    """Boundary F-measure: precision/recall of boundary pixels within tolerance."""
    if pred.shape != gt.shape:
        raise ContractViolation(f"mask resolutions differ: {pred.shape} vs {gt.shape}")
    if tolerance is None:
        tolerance = default_boundary_tolerance(*pred.shape)
    pb = boundary_pixels(pred == object_id)
    gb = boundary_pixels(gt == object_id)
    if not pb.any() and not gb.any():
        return 1.0
    if not pb.any() or not gb.any():
        return 0.0
    dist_to_gt = distance_transform_edt(~gb)
    dist_to_pred = distance_transform_edt(~pb)
    precision = float((dist_to_gt[pb] <= tolerance).mean())
    recall = float((dist_to_pred[gb] <= tolerance).mean())
    if precision + recall == 0.0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def jf_score(pred: np.ndarray, gt: np.ndarray, object_id: int) -> tuple[float, float]:
    return (
        region_similarity(pred, gt, object_id),
        contour_accuracy(pred, gt, object_id),
    )
