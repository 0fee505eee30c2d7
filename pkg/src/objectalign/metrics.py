"""Pairwise consistency metrics between frame records."""

from __future__ import annotations

import numpy as np

from .features import BinaryMask, FrameRecord, TransitionFeatures

__all__ = [
    "cosine_similarity",
    "histogram_correlation",
    "mask_iou",
    "lpips_distance",
    "transition_features",
]


def _checked_pair(a, b, what: str) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1:
        raise ValueError(f"{what} inputs must be flat vectors")
    if a.size != b.size:
        raise ValueError(f"{what} length mismatch: {a.size} vs {b.size}")
    return a, b


def cosine_similarity(a, b) -> float:
    """Cosine of the angle between two vectors, clamped to [-1, 1].

    The clamp guards against floating-point round-off pushing the ratio a hair
    past unity for near-identical vectors.
    """
    a, b = _checked_pair(a, b, "cosine")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0:
        raise ValueError("cosine undefined: first argument has zero norm")
    if norm_b == 0.0:
        raise ValueError("cosine undefined: second argument has zero norm")
    raw = float(np.dot(a, b) / (norm_a * norm_b))
    return min(1.0, max(-1.0, raw))


def histogram_correlation(h1, h2) -> float:
    """Cosine similarity between two histograms (compared after L2 scaling).

    Histograms are stored L1-normalized; the measure itself divides by the L2
    norms, so any positive scaling of either input leaves the result unchanged.
    """
    h1, h2 = _checked_pair(h1, h2, "histogram")
    norm1 = float(np.linalg.norm(h1))
    norm2 = float(np.linalg.norm(h2))
    if norm1 == 0.0:
        raise ValueError("histogram correlation undefined: first histogram has zero norm")
    if norm2 == 0.0:
        raise ValueError("histogram correlation undefined: second histogram has zero norm")
    raw = float(np.dot(h1, h2) / (norm1 * norm2))
    return min(1.0, max(-1.0, raw))


def _run_pairs(mask: BinaryMask):
    value = 0
    for length in mask.rle:
        if length:
            yield length, value
        value = 1 - value


def mask_iou(m1: BinaryMask, m2: BinaryMask) -> float:
    """Intersection-over-union of two masks, counted directly on run lengths.

    Both masks empty is treated as perfect agreement (1.0); exactly one empty
    yields 0.0 through the usual ratio.
    """
    if not isinstance(m1, BinaryMask) or not isinstance(m2, BinaryMask):
        raise ValueError("mask_iou expects BinaryMask inputs")
    if (m1.height, m1.width) != (m2.height, m2.width):
        raise ValueError(
            f"mask dimension mismatch: {(m1.height, m1.width)} vs {(m2.height, m2.width)}"
        )
    gen1 = _run_pairs(m1)
    gen2 = _run_pairs(m2)
    remaining1 = remaining2 = 0
    value1 = value2 = 0
    intersection = union = 0
    while True:
        if remaining1 == 0:
            nxt = next(gen1, None)
            if nxt is None:
                break
            remaining1, value1 = nxt
        if remaining2 == 0:
            nxt = next(gen2, None)
            if nxt is None:
                break
            remaining2, value2 = nxt
        step = min(remaining1, remaining2)
        if value1 and value2:
            intersection += step
        if value1 or value2:
            union += step
        remaining1 -= step
        remaining2 -= step
    if union == 0:
        return 1.0
    return intersection / union


def lpips_distance(phi1, phi2) -> float:
    """Euclidean distance between two perceptual feature vectors."""
    phi1, phi2 = _checked_pair(phi1, phi2, "lpips")
    return float(np.linalg.norm(phi1 - phi2))


def transition_features(fi: FrameRecord, fj: FrameRecord) -> TransitionFeatures:
    """Compute all four consistency metrics for an ordered frame pair."""
    return TransitionFeatures(
        s_cos=cosine_similarity(fi.clip_embedding, fj.clip_embedding),
        s_hist=histogram_correlation(fi.histogram, fj.histogram),
        s_iou=mask_iou(fi.mask, fj.mask),
        d_lpips=lpips_distance(fi.lpips_features, fj.lpips_features),
    )
