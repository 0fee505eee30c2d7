"""Transition metric hand values and RLE IoU against dense counting."""

import numpy as np
import pytest

from objectalign import (
    BinaryMask,
    cosine_similarity,
    histogram_correlation,
    lpips_distance,
    mask_iou,
    transition_features,
)

from helpers import make_frame
from oracles import dense_iou


def test_cosine_hand_value():
    # (0.6*0.8 + 0.8*0.6) / (1 * 1) = 0.96
    assert cosine_similarity(np.array([0.6, 0.8]), np.array([0.8, 0.6])) == pytest.approx(0.96)
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == 1.0
    assert cosine_similarity(np.array([1.0, 0.0]), np.array([-1.0, 0.0])) == -1.0


def test_cosine_is_clamped():
    # numerically identical vectors can exceed 1 before clamping
    v = np.array([0.1, 0.2, 0.3]) * 3
    assert cosine_similarity(v, v) <= 1.0


def test_cosine_zero_norm_errors_name_the_argument():
    v = np.array([1.0, 0.0])
    zero = np.zeros(2)
    with pytest.raises(ValueError, match="first argument"):
        cosine_similarity(zero, v)
    with pytest.raises(ValueError, match="second argument"):
        cosine_similarity(v, zero)


def test_cosine_length_mismatch():
    with pytest.raises(ValueError, match="length mismatch: 2 vs 3"):
        cosine_similarity(np.zeros(2) + 1, np.zeros(3) + 1)


def test_histogram_correlation_hand_values():
    a = np.array([0.0, 0.5, 0.5])
    b = np.array([1.0, 0.0, 0.0])
    assert histogram_correlation(a, b) == 0.0
    c = np.array([0.5, 0.5])
    d = np.array([1.0, 0.0])
    # cos([.5,.5],[1,0]) = .5 / (sqrt(.5)*1)
    assert histogram_correlation(c, d) == pytest.approx(1 / np.sqrt(2))
    assert histogram_correlation(c, c) == pytest.approx(1.0)


def test_histogram_correlation_renormalizes_counts():
    # raw counts and normalized values agree
    counts = np.array([2.0, 6.0])
    normed = np.array([0.25, 0.75])
    other = np.array([0.5, 0.5])
    assert histogram_correlation(counts, other) == pytest.approx(histogram_correlation(normed, other))


def test_lpips_distance_hand_value():
    assert lpips_distance(np.array([0.0, 0.0]), np.array([3.0, 4.0])) == 5.0
    assert lpips_distance(np.array([1.0, 1.0]), np.array([1.0, 1.0])) == 0.0


def test_mask_iou_agrees_with_dense_counting():
    rng = np.random.default_rng(7)
    for _ in range(500):
        h = int(rng.integers(1, 16))
        w = int(rng.integers(1, 16))
        a = BinaryMask.from_dense((rng.random((h, w)) < rng.random()).astype(int))
        b = BinaryMask.from_dense((rng.random((h, w)) < rng.random()).astype(int))
        assert mask_iou(a, b) == pytest.approx(dense_iou(a, b), abs=1e-15)


def test_mask_iou_edge_cases():
    empty = BinaryMask.from_dense(np.zeros((3, 3), dtype=int))
    full = BinaryMask.from_dense(np.ones((3, 3), dtype=int))
    assert mask_iou(empty, empty) == 1.0
    assert mask_iou(full, full) == 1.0
    assert mask_iou(empty, full) == 0.0
    with pytest.raises(ValueError, match="dimension"):
        mask_iou(empty, BinaryMask.from_dense(np.zeros((2, 2), dtype=int)))


def test_transition_features_canonical_order():
    a = make_frame(0)
    b = make_frame(1, lpips_features=np.array([4.0, 0.5, -0.5, 0.25, 0.0]))
    t = transition_features(a, b)
    assert t.s_cos == pytest.approx(1.0)
    assert t.s_hist == pytest.approx(1.0)
    assert t.s_iou == 1.0
    assert t.d_lpips == pytest.approx(3.0)
    assert t.s_lpips_inverted == pytest.approx(-3.0)
    vec = t.as_vector()
    assert vec.tolist() == [t.s_cos, t.s_hist, t.s_iou, -t.d_lpips]
