"""Synthetic benchmark harness: clean videos, fault injection, and scoring.

The generator produces feature streams whose adjacent-frame statistics sit
far inside every consistency bound (slowly drifting embeddings, a rectangle
mask creeping one pixel every few frames). Injection events then corrupt a
contiguous block of frames in a way that trips primarily one check each, and
the returned ground truth records which transitions each check should flag,
so detector precision/recall can be scored exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .engine import CHECK_NAMES, VerificationReport
from .features import BinaryMask, FrameRecord, TransitionFeatures
from .metrics import transition_features
from .thresholds import TrainingSet

__all__ = [
    "EventType",
    "InjectionEvent",
    "GroundTruth",
    "CheckScore",
    "DetectionScore",
    "make_clean_video",
    "transitions_from_video",
    "adjacent_pairs",
    "synthetic_negatives",
    "same_index_negatives",
    "adjacent_negatives",
    "make_training_set",
    "inject_inconsistencies",
    "score_detection",
    "NEGATIVE_BANDS",
]


class EventType(str, Enum):
    EMBEDDING_DRIFT = "embedding_drift"
    COLOR_SHIFT = "color_shift"
    MASK_JITTER = "mask_jitter"
    PERCEPTUAL_NOISE = "perceptual_noise"
    PROP_FLIP = "prop_flip"


# The one check each event type is designed to trip.
EVENT_TARGET_CHECK = {
    EventType.EMBEDDING_DRIFT: "smt",
    EventType.COLOR_SHIFT: "hist",
    EventType.MASK_JITTER: "iou",
    EventType.PERCEPTUAL_NOISE: "lpips",
    EventType.PROP_FLIP: "temporal",
}


@dataclass(frozen=True)
class InjectionEvent:
    """One corruption: `length` frames starting at `start`.

    Severity is in the natural units of the targeted feature: per-dimension
    offset for embedding drift, mass fraction for color shift, IoU reduction
    for mask jitter, noise norm for perceptual noise, and confidence drop for
    prop flips. `prop` narrows a prop flip to one proposition (None = all).
    """

    type: EventType
    start: int
    length: int
    severity: float
    prop: str | None = None

    def __post_init__(self):
        if self.start < 0:
            raise ValueError(f"event start must be >= 0, got {self.start}")
        if self.length < 1:
            raise ValueError(f"event length must be >= 1, got {self.length}")
        if not math.isfinite(self.severity) or self.severity <= 0.0:
            raise ValueError(f"event severity must be finite and > 0, got {self.severity!r}")
        if self.prop is not None and self.type is not EventType.PROP_FLIP:
            raise ValueError("prop applies only to prop_flip events")

    @property
    def frames(self) -> range:
        return range(self.start, self.start + self.length)

    def to_json_dict(self) -> dict:
        obj = {
            "type": self.type.value,
            "start": self.start,
            "length": self.length,
            "severity": self.severity,
        }
        if self.prop is not None:
            obj["prop"] = self.prop
        return obj

    @classmethod
    def from_json_dict(cls, obj: dict) -> "InjectionEvent":
        if not isinstance(obj, dict):
            raise ValueError("event must be a JSON object")
        allowed = {"type", "start", "length", "severity", "prop"}
        unknown = set(obj) - allowed
        if unknown:
            raise ValueError(f"unknown event fields: {sorted(unknown)}")
        missing = {"type", "start", "length", "severity"} - set(obj)
        if missing:
            raise ValueError(f"event is missing fields: {sorted(missing)}")
        try:
            kind = EventType(obj["type"])
        except ValueError:
            raise ValueError(
                f"unknown event type {obj['type']!r}; expected one of "
                f"{[t.value for t in EventType]}"
            ) from None
        return cls(
            type=kind,
            start=int(obj["start"]),
            length=int(obj["length"]),
            severity=float(obj["severity"]),
            prop=obj.get("prop"),
        )


@dataclass(frozen=True)
class GroundTruth:
    """Per-check sets of transitions the injected events should trip."""

    affected: Mapping[str, frozenset[int]]

    def __post_init__(self):
        cleaned = {}
        for name in CHECK_NAMES:
            cleaned[name] = frozenset(self.affected.get(name, frozenset()))
        unknown = set(self.affected) - set(CHECK_NAMES)
        if unknown:
            raise ValueError(f"unknown check names in ground truth: {sorted(unknown)}")
        object.__setattr__(self, "affected", cleaned)

    def transitions_for(self, check: str) -> frozenset[int]:
        return self.affected[check]

    @property
    def any_affected(self) -> frozenset[int]:
        out: set[int] = set()
        for transitions in self.affected.values():
            out |= transitions
        return frozenset(out)


def make_clean_video(
    num_frames: int,
    seed: int,
    *,
    clip_dim: int = 32,
    region_dim: int = 16,
    hist_bins: int = 48,
    lpips_dim: int = 24,
    canvas: tuple[int, int] = (64, 64),
    rect: tuple[int, int] = (20, 20),
) -> list[FrameRecord]:
    """Generate a consistency-clean feature stream.

    All features random-walk slowly: adjacent cosine stays above ~0.999,
    per-dimension region drift under ~0.004, perceptual distance a few
    hundredths, and the mask rectangle moves one pixel roughly every twelve
    frames, keeping adjacent IoU high. Prop confidences stay well above 0.5.
    """
    if num_frames < 2:
        raise ValueError(f"a video needs at least 2 frames, got {num_frames}")
    height, width = canvas
    rect_h, rect_w = rect
    max_x = 6 + (num_frames - 1) // 12 + rect_w
    if max_x > width or 22 + rect_h > height:
        raise ValueError("rectangle walk does not fit the canvas; enlarge it")
    rng = np.random.default_rng(seed)

    clip = rng.normal(size=clip_dim)
    clip /= np.linalg.norm(clip)
    fg = rng.uniform(-1.0, 1.0, size=region_dim)
    bg = rng.uniform(-1.0, 1.0, size=region_dim)
    lpips = rng.normal(size=lpips_dim)
    hist = rng.uniform(0.5, 1.5, size=hist_bins)
    hist /= hist.sum()

    frames: list[FrameRecord] = []
    for t in range(num_frames):
        if t > 0:
            clip = clip + rng.normal(0.0, 0.002, size=clip_dim)
            clip /= np.linalg.norm(clip)
            fg = fg + rng.uniform(-0.004, 0.004, size=region_dim)
            bg = bg + rng.uniform(-0.003, 0.003, size=region_dim)
            lpips = lpips + rng.normal(0.0, 0.004, size=lpips_dim)
            hist = np.clip(hist * (1.0 + rng.normal(0.0, 0.003, size=hist_bins)), 1e-6, None)
            hist = hist / hist.sum()
        x0 = 6 + t // 12
        dense = np.zeros((height, width), dtype=bool)
        dense[22 : 22 + rect_h, x0 : x0 + rect_w] = True
        frames.append(
            FrameRecord(
                frame_index=t,
                clip_embedding=clip.copy(),
                fg_embedding=fg.copy(),
                bg_embedding=bg.copy(),
                lpips_features=lpips.copy(),
                histogram=hist.copy(),
                mask=BinaryMask.from_dense(dense),
                prop_confidences={"subject_present": 0.92 + 0.06 * float(rng.random())},
                image_path=None,
            )
        )
    return frames


def transitions_from_video(video: Sequence[FrameRecord]) -> list[TransitionFeatures]:
    """Metric scores for every adjacent pair, in order."""
    return [transition_features(video[i], video[i + 1]) for i in range(len(video) - 1)]


def adjacent_pairs(video: Sequence[FrameRecord]) -> list[tuple[FrameRecord, FrameRecord]]:
    """Adjacent frame pairs, the calibration input for drift tolerances."""
    return [(video[i], video[i + 1]) for i in range(len(video) - 1)]


# Metric ranges (low, high) that edited/original frame pairs land in, far
# below anything adjacent clean frames produce. The last band is on the
# inverted-distance axis.
NEGATIVE_BANDS = {
    "cos": (0.2, 0.6),
    "hist": (0.2, 0.6),
    "iou": (0.15, 0.5),
    "lpips_inverted": (-0.6, -0.25),
}


def synthetic_negatives(
    count: int,
    seed: int,
    bands: Mapping[str, tuple[float, float]] = NEGATIVE_BANDS,
) -> list[TransitionFeatures]:
    """Draw inconsistent-pair scores uniformly from per-metric bands."""
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    missing = set(NEGATIVE_BANDS) - set(bands)
    if missing:
        raise ValueError(f"bands is missing metrics: {sorted(missing)}")
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        inv = rng.uniform(*bands["lpips_inverted"])
        out.append(
            TransitionFeatures(
                s_cos=float(rng.uniform(*bands["cos"])),
                s_hist=float(rng.uniform(*bands["hist"])),
                s_iou=float(rng.uniform(*bands["iou"])),
                d_lpips=float(-inv),
            )
        )
    return out


def same_index_negatives(
    original: Sequence[FrameRecord],
    edited: Sequence[FrameRecord],
    indices: Sequence[int] | None = None,
) -> list[TransitionFeatures]:
    """Negatives from cross-video pairs at the same frame index."""
    if len(original) != len(edited):
        raise ValueError(
            f"videos differ in length: {len(original)} vs {len(edited)}"
        )
    if indices is None:
        indices = range(len(original))
    return [transition_features(original[i], edited[i]) for i in indices]


def adjacent_negatives(
    edited: Sequence[FrameRecord], transitions: Sequence[int]
) -> list[TransitionFeatures]:
    """Negatives from adjacent pairs inside an edited video."""
    return [transition_features(edited[i], edited[i + 1]) for i in transitions]


def make_training_set(
    video: Sequence[FrameRecord],
    seed: int,
    *,
    negative_count: int | None = None,
    bands: Mapping[str, tuple[float, float]] = NEGATIVE_BANDS,
) -> TrainingSet:
    """Positives from the clean video's transitions, negatives from the bands."""
    positives = transitions_from_video(video)
    if negative_count is None:
        negative_count = len(positives)
    return TrainingSet(
        positives=tuple(positives),
        negatives=tuple(synthetic_negatives(negative_count, seed, bands)),
    )


def _affected_transitions(event: InjectionEvent, num_frames: int) -> frozenset[int]:
    last_transition = num_frames - 2
    if event.type is EventType.PROP_FLIP:
        candidates = (event.start - 1, event.start)
    else:
        candidates = range(event.start - 1, event.start + event.length)
    return frozenset(t for t in candidates if 0 <= t <= last_transition)


def _distinct_signs(rng: np.random.Generator, dim: int, previous: np.ndarray | None) -> np.ndarray:
    signs = rng.choice((-1.0, 1.0), size=dim)
    while previous is not None and np.array_equal(signs, previous):
        signs = rng.choice((-1.0, 1.0), size=dim)
    return signs


def _flip_mask(mask: BinaryMask, severity: float, rng: np.random.Generator) -> BinaryMask:
    """Flip random pixels so IoU against the original drops to ~1 - severity."""
    dense = mask.decode()
    area = int(dense.sum())
    if area == 0:
        raise ValueError("mask jitter needs a non-empty mask")
    target = min(max(1.0 - severity, 0.0), 1.0)
    n = math.ceil(area * (1.0 - target) / (1.0 + target))
    n_in = min(n, area)
    inside = np.flatnonzero(dense)
    outside = np.flatnonzero(~dense)
    n_out = min(n, outside.size)
    flat = dense.reshape(-1).copy()
    if n_in:
        flat[rng.choice(inside, size=n_in, replace=False)] = False
    if n_out:
        flat[rng.choice(outside, size=n_out, replace=False)] = True
    return BinaryMask.from_dense(flat.reshape(dense.shape))


def inject_inconsistencies(
    video: Sequence[FrameRecord],
    events: Sequence[InjectionEvent],
    seed: int,
) -> tuple[list[FrameRecord], GroundTruth]:
    """Apply non-overlapping corruption events; return the edited video + truth.

    Each affected frame is perturbed independently (fresh random signs,
    target bins, noise directions per frame), so transitions between two
    corrupted frames trip the targeted check just like the entry and exit
    transitions do. Re-running with the same seed reproduces the output
    exactly.
    """
    video = list(video)
    num_frames = len(video)
    occupied: set[int] = set()
    for event in events:
        if event.start + event.length > num_frames:
            raise ValueError(
                f"event at {event.start} (length {event.length}) exceeds the "
                f"{num_frames}-frame video"
            )
        overlap = occupied & set(event.frames)
        if overlap:
            raise ValueError(f"events overlap at frames {sorted(overlap)}")
        occupied |= set(event.frames)

    rng = np.random.default_rng(seed)
    corrupted = list(video)
    truth: dict[str, set[int]] = {name: set() for name in CHECK_NAMES}

    for event in events:
        truth[EVENT_TARGET_CHECK[event.type]] |= _affected_transitions(event, num_frames)
        prev_signs: np.ndarray | None = None
        prev_direction: np.ndarray | None = None
        prev_bin: int | None = None
        for offset, index in enumerate(event.frames):
            frame = corrupted[index]
            if event.type is EventType.EMBEDDING_DRIFT:
                signs = _distinct_signs(rng, frame.fg_embedding.size, prev_signs)
                prev_signs = signs
                corrupted[index] = frame.replace_features(
                    fg_embedding=frame.fg_embedding + event.severity * signs
                )
            elif event.type is EventType.COLOR_SHIFT:
                bins = frame.histogram.size
                target_bin = int(rng.integers(bins))
                while prev_bin is not None and target_bin == prev_bin:
                    target_bin = int(rng.integers(bins))
                prev_bin = target_bin
                fraction = min(event.severity, 1.0)
                hist = (1.0 - fraction) * frame.histogram
                hist = hist.copy()
                hist[target_bin] += fraction
                corrupted[index] = frame.replace_features(histogram=hist)
            elif event.type is EventType.MASK_JITTER:
                corrupted[index] = frame.replace_features(
                    mask=_flip_mask(frame.mask, event.severity, rng)
                )
            elif event.type is EventType.PERCEPTUAL_NOISE:
                direction = rng.normal(size=frame.lpips_features.size)
                direction /= np.linalg.norm(direction)
                while prev_direction is not None and float(direction @ prev_direction) > 0.8:
                    direction = rng.normal(size=frame.lpips_features.size)
                    direction /= np.linalg.norm(direction)
                prev_direction = direction
                corrupted[index] = frame.replace_features(
                    lpips_features=frame.lpips_features + event.severity * direction
                )
            else:  # PROP_FLIP
                names = (
                    [event.prop]
                    if event.prop is not None
                    else list(frame.prop_confidences)
                )
                props = dict(frame.prop_confidences)
                for name in names:
                    if name not in props:
                        raise ValueError(
                            f"frame {index} has no proposition {name!r} to flip"
                        )
                    props[name] = min(max(props[name] - event.severity, 0.0), 1.0)
                corrupted[index] = frame.replace_features(prop_confidences=props)

    return corrupted, GroundTruth(affected=truth)


@dataclass(frozen=True)
class CheckScore:
    """Detection counts and rates for one check."""

    true_positives: int
    false_positives: int
    false_negatives: int

    @property
    def flagged(self) -> int:
        return self.true_positives + self.false_positives

    @property
    def precision(self) -> float:
        if self.flagged == 0:
            return 1.0
        return self.true_positives / self.flagged

    @property
    def recall(self) -> float:
        expected = self.true_positives + self.false_negatives
        if expected == 0:
            return 1.0
        return self.true_positives / expected


@dataclass(frozen=True)
class DetectionScore:
    per_check: Mapping[str, CheckScore]
    overall: CheckScore


def _flagged_transitions(report: VerificationReport) -> dict[str, set[int]]:
    flagged: dict[str, set[int]] = {name: set() for name in CHECK_NAMES}
    for verdict in report.verdicts:
        i = verdict.transition_index
        clip_ok, hist_ok, iou_ok, lpips_ok = verdict.flags
        if not clip_ok:
            flagged["clip"].add(i)
        if not hist_ok:
            flagged["hist"].add(i)
        if not iou_ok:
            flagged["iou"].add(i)
        if not lpips_ok:
            flagged["lpips"].add(i)
        if not verdict.drift.satisfied:
            flagged["smt"].add(i)
        if not verdict.temporal_pass:
            flagged["temporal"].add(i)
    return flagged


def score_detection(report: VerificationReport, truth: GroundTruth) -> DetectionScore:
    """Precision/recall per check against the transitions each event targets.

    A check that raised zero flags scores precision 1.0 by convention (its
    flag count is visible in the per-check counts); a check with no targeted
    transitions scores recall 1.0.
    """
    flagged = _flagged_transitions(report)
    per_check: dict[str, CheckScore] = {}
    tp_total = fp_total = fn_total = 0
    for name in CHECK_NAMES:
        expected = truth.transitions_for(name)
        got = flagged[name]
        tp = len(got & expected)
        fp = len(got - expected)
        fn = len(expected - got)
        per_check[name] = CheckScore(tp, fp, fn)
        tp_total += tp
        fp_total += fp
        fn_total += fn
    return DetectionScore(
        per_check=per_check,
        overall=CheckScore(tp_total, fp_total, fn_total),
    )
