import numpy as np
import pytest

from givos.core import ContractViolation
from givos.metrics import (
    boundary_pixels,
    contour_accuracy,
    default_boundary_tolerance,
    region_similarity,
)


def square_mask(size, top, left, side, object_id=1):
    m = np.zeros((size, size), dtype=int)
    m[top : top + side, left : left + side] = object_id
    return m


class TestRegionSimilarity:
    def test_identical(self):
        m = square_mask(16, 4, 4, 6)
        assert region_similarity(m, m, 1) == 1.0

    def test_disjoint(self):
        a = square_mask(16, 0, 0, 4)
        b = square_mask(16, 10, 10, 4)
        assert region_similarity(a, b, 1) == 0.0

    def test_half_overlap(self):
        pred = np.zeros((8, 8), dtype=int)
        pred[:, :4] = 1
        gt = np.ones((8, 8), dtype=int)
        assert region_similarity(pred, gt, 1) == pytest.approx(0.5)

    def test_both_empty_is_one(self):
        empty = np.zeros((8, 8), dtype=int)
        assert region_similarity(empty, empty, 1) == 1.0

    def test_resolution_mismatch(self):
        with pytest.raises(ContractViolation):
            region_similarity(np.zeros((4, 4)), np.zeros((5, 5)), 1)

    def test_translation_invariance_of_pair(self):
        a = square_mask(20, 4, 4, 6)
        b = square_mask(20, 6, 6, 6)
        j1 = region_similarity(a, b, 1)
        a2 = square_mask(20, 9, 9, 6)
        b2 = square_mask(20, 11, 11, 6)
        assert region_similarity(a2, b2, 1) == pytest.approx(j1)


class TestBoundary:
    def test_boundary_of_square(self):
        m = square_mask(10, 2, 2, 4).astype(bool)
        b = boundary_pixels(m)
        assert b.sum() == 12  # 4x4 square: perimeter cells
        assert b[2, 2] and b[5, 5]
        assert not b[3, 3]

    def test_border_touching_mask_has_boundary(self):
        m = np.zeros((6, 6), dtype=bool)
        m[0:2, 0:2] = True
        assert boundary_pixels(m).sum() == 4  # the whole blob borders outside

    def test_default_tolerance(self):
        assert default_boundary_tolerance(480, 854) == 8
        assert default_boundary_tolerance(64, 64) == 1


class TestContourAccuracy:
    def test_identical(self):
        m = square_mask(16, 4, 4, 6)
        assert contour_accuracy(m, m, 1) == 1.0

    def test_empty_pred_nonempty_gt(self):
        gt = square_mask(16, 4, 4, 6)
        assert contour_accuracy(np.zeros_like(gt), gt, 1) == 0.0

    def test_both_empty(self):
        empty = np.zeros((8, 8), dtype=int)
        assert contour_accuracy(empty, empty, 1) == 1.0

    def test_one_pixel_shift_with_tolerance(self):
        pred = square_mask(20, 5, 5, 6)
        gt = square_mask(20, 5, 6, 6)
        assert contour_accuracy(pred, gt, 1, tolerance=1) == 1.0

    def test_one_pixel_shift_zero_tolerance(self):
        # brute-force boundary matching on this fixture: each boundary has 20
        # pixels; the 6x6 squares shifted by one column share the pixels on
        # their top and bottom edges' overlap columns (2 x 4 = 8 common), plus
        # corner-column pixels already counted; exact matched fraction 8/20
        pred = square_mask(20, 5, 5, 6)
        gt = square_mask(20, 5, 6, 6)
        pb = boundary_pixels(pred == 1)
        gb = boundary_pixels(gt == 1)
        want_precision = (pb & gb).sum() / pb.sum()
        want_recall = (pb & gb).sum() / gb.sum()
        want_f = 2 * want_precision * want_recall / (want_precision + want_recall)
        assert contour_accuracy(pred, gt, 1, tolerance=0) == pytest.approx(want_f)

    def test_symmetry_under_joint_translation(self):
        pred = square_mask(24, 4, 4, 6)
        gt = square_mask(24, 5, 5, 6)
        f1 = contour_accuracy(pred, gt, 1, tolerance=1)
        pred2 = square_mask(24, 10, 10, 6)
        gt2 = square_mask(24, 11, 11, 6)
        assert contour_accuracy(pred2, gt2, 1, tolerance=1) == pytest.approx(f1)
