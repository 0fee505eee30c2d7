"""Repair planning and execution for flagged transition runs.

Each maximal run of inconsistent transitions [start, end] has its frames
f_start..f_end regenerated from the nearest untouched neighbors: f_{start-1}
and f_{end+1} when both exist (feature-space or pixel-space interpolation at
depth ceil(log2(k+1))), otherwise replication from whichever side remains.
A video whose every transition is flagged has no trustworthy frame left to
anchor on and is reported unrepairable.
"""

from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .engine import InconsistentRun, VerificationReport
from .features import FrameRecord

__all__ = [
    "Strategy",
    "RepairAction",
    "NoAnchorsError",
    "InterpolatorError",
    "interpolation_depth",
    "plan_repairs",
    "builtin_interpolate",
    "Interpolator",
    "BuiltinInterpolator",
    "ExternalInterpolator",
    "execute_repairs",
]


class NoAnchorsError(RuntimeError):
    """Every transition is flagged, so no frame can anchor a repair."""


class InterpolatorError(RuntimeError):
    """An interpolator produced unusable output or failed outright."""


class Strategy(str, Enum):
    INTERPOLATE = "interpolate"
    REPLICATE_NEAREST = "replicate_nearest"


def interpolation_depth(k: int) -> int:
    """Rounds of recursive midpoint interpolation needed for k new frames.

    Computed as ceil(log2(k + 1)) in pure integer arithmetic: each round
    doubles the number of available in-between slots, so gamma rounds cover
    up to 2^gamma - 1 frames.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    m = k + 1
    bits = m.bit_length()
    if m == 1 << (bits - 1):
        return bits - 1
    return bits


@dataclass(frozen=True)
class RepairAction:
    """One run plus the anchors and strategy chosen for it."""

    run: InconsistentRun
    anchor_prev: int | None
    anchor_next: int | None
    depth: int
    strategy: Strategy

    def __post_init__(self):
        if self.strategy is Strategy.INTERPOLATE:
            if self.anchor_prev is None or self.anchor_next is None:
                raise ValueError("interpolation requires both anchors")
        elif self.anchor_prev is None and self.anchor_next is None:
            raise ValueError("replication requires at least one anchor")
        if self.depth != interpolation_depth(self.run.k):
            raise ValueError(
                f"depth {self.depth} does not match run length {self.run.k}"
            )


def plan_repairs(
    report: VerificationReport, total_frames: int
) -> tuple[list[RepairAction], bool]:
    """Choose anchors and strategies for every flagged run.

    Returns the actions plus a flag telling whether every run got both
    anchors (the precondition under which interpolation fidelity is argued).
    Raises NoAnchorsError when the flagged set covers every transition.
    """
    if total_frames < 2:
        raise ValueError("planning needs a video of at least 2 frames")
    transition_count = total_frames - 1
    for run in report.runs:
        if run.end > transition_count - 1:
            raise ValueError(
                f"run [{run.start}, {run.end}] exceeds transition range 0..{transition_count - 1}"
            )
    if any(run.start == 0 and run.end == transition_count - 1 for run in report.runs):
        raise NoAnchorsError(
            "every transition is inconsistent; no frame is trustworthy enough to anchor a repair"
        )

    replaced: set[int] = set()
    for run in report.runs:
        replaced.update(range(run.start, run.end + 1))

    actions: list[RepairAction] = []
    all_anchored = True
    for run in report.runs:
        prev_frame = run.start - 1
        next_frame = run.end + 1
        anchor_prev = prev_frame if prev_frame >= 0 and prev_frame not in replaced else None
        anchor_next = next_frame if next_frame <= total_frames - 1 and next_frame not in replaced else None
        if anchor_prev is not None and anchor_next is not None:
            strategy = Strategy.INTERPOLATE
        else:
            strategy = Strategy.REPLICATE_NEAREST
            all_anchored = False
        actions.append(
            RepairAction(
                run=run,
                anchor_prev=anchor_prev,
                anchor_next=anchor_next,
                depth=interpolation_depth(run.k),
                strategy=strategy,
            )
        )
    return actions, all_anchored


def _blend_unit(a: np.ndarray, b: np.ndarray, t: float, pair: str) -> np.ndarray:
    blended = (1.0 - t) * a + t * b
    norm = float(np.linalg.norm(blended))
    if norm == 0.0:
        raise InterpolatorError(
            f"unit-vector blend degenerated to zero norm between frames {pair} at t={t}"
        )
    return blended / norm


def builtin_interpolate(
    anchor_a: FrameRecord, anchor_b: FrameRecord, count: int
) -> list[FrameRecord]:
    """Feature-space interpolation producing `count` frames between anchors.

    Frame m of the output sits at t = m / (count + 1). Whole-frame embeddings
    are blended and renormalized to unit length; foreground and background
    embeddings blend without renormalization so the drift bounds see plain
    linear motion; histograms blend and are rescaled to sum to one; the mask
    is copied from the nearer anchor (ties go to the earlier frame); prop
    confidences blend linearly. Output frame indices continue directly after
    ``anchor_a``.
    """
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    pair = f"{anchor_a.frame_index}/{anchor_b.frame_index}"
    frames: list[FrameRecord] = []
    for m in range(1, count + 1):
        t = m / (count + 1)
        clip = _blend_unit(anchor_a.clip_embedding, anchor_b.clip_embedding, t, pair)
        fg = (1.0 - t) * anchor_a.fg_embedding + t * anchor_b.fg_embedding
        bg = (1.0 - t) * anchor_a.bg_embedding + t * anchor_b.bg_embedding
        lpips = (1.0 - t) * anchor_a.lpips_features + t * anchor_b.lpips_features
        hist = (1.0 - t) * anchor_a.histogram + t * anchor_b.histogram
        total = float(hist.sum())
        if total <= 0.0:
            raise InterpolatorError(f"histogram blend degenerated between frames {pair}")
        hist = hist / total
        mask = anchor_a.mask if t <= 0.5 else anchor_b.mask
        props = {
            name: (1.0 - t) * anchor_a.prop_confidences[name]
            + t * anchor_b.prop_confidences[name]
            for name in anchor_a.prop_confidences
        }
        frames.append(
            FrameRecord(
                frame_index=anchor_a.frame_index + m,
                clip_embedding=clip,
                fg_embedding=fg,
                bg_embedding=bg,
                lpips_features=lpips,
                histogram=hist,
                mask=mask,
                prop_confidences=props,
                image_path=None,
            )
        )
    return frames


class Interpolator:
    """Interface for frame synthesis between two anchors."""

    capability = "feature-space"

    def interpolate(
        self,
        anchor_prev: FrameRecord,
        anchor_next: FrameRecord,
        count: int,
        depth: int,
    ) -> list[FrameRecord]:
        raise NotImplementedError


class BuiltinInterpolator(Interpolator):
    capability = "feature-space"

    def interpolate(self, anchor_prev, anchor_next, count, depth):
        return builtin_interpolate(anchor_prev, anchor_next, count)


class ExternalInterpolator(Interpolator):
    """Drives a subprocess speaking the JSON interpolation protocol.

    The request object carries both anchor records, the frame count, and the
    interpolation depth on stdin; the reply must be {"frames": [...]} on
    stdout. A nonzero exit or malformed reply raises InterpolatorError.
    """

    capability = "pixel-space"

    def __init__(self, command: str | Sequence[str], timeout: float = 120.0):
        if isinstance(command, str):
            self.command = shlex.split(command)
        else:
            self.command = list(command)
        if not self.command:
            raise ValueError("empty interpolator command")
        self.timeout = timeout

    def interpolate(self, anchor_prev, anchor_next, count, depth):
        request = {
            "anchor_prev": anchor_prev.to_json_dict(),
            "anchor_next": anchor_next.to_json_dict(),
            "count": count,
            "depth": depth,
        }
        try:
            result = subprocess.run(
                self.command,
                input=json.dumps(request),
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except FileNotFoundError as exc:
            raise InterpolatorError(f"interpolator command not found: {self.command[0]!r}") from exc
        except subprocess.TimeoutExpired as exc:
            raise InterpolatorError(f"interpolator timed out after {self.timeout}s") from exc
        if result.returncode != 0:
            raise InterpolatorError(
                f"interpolator exited with {result.returncode}: {result.stderr.strip()[:500]}"
            )
        try:
            reply = json.loads(result.stdout)
        except json.JSONDecodeError as exc:
            raise InterpolatorError(f"interpolator reply is not valid JSON: {exc.msg}") from exc
        if not isinstance(reply, dict) or "frames" not in reply or not isinstance(reply["frames"], list):
            raise InterpolatorError('interpolator reply must be {"frames": [...]}')
        frames = []
        for entry in reply["frames"]:
            try:
                frames.append(FrameRecord.from_json_dict(entry))
            except ValueError as exc:
                raise InterpolatorError(f"interpolator returned an invalid frame: {exc}") from exc
        return frames


def execute_repairs(
    video: Sequence[FrameRecord],
    actions: Sequence[RepairAction],
    interpolator: Interpolator,
) -> list[FrameRecord]:
    """Apply planned repairs, replacing only frames inside flagged runs.

    Interpolated output is validated to contain exactly k frames carrying the
    replaced indices. Replication copies the nearest anchor's features into
    each replaced slot, updating only the frame index.
    """
    video = list(video)
    total = len(video)
    repaired = list(video)
    for action in actions:
        run = action.run
        k = run.k
        if run.end > total - 2:
            raise ValueError(f"run [{run.start}, {run.end}] does not fit a {total}-frame video")
        if action.strategy is Strategy.INTERPOLATE:
            anchor_a = video[action.anchor_prev]
            anchor_b = video[action.anchor_next]
            frames = interpolator.interpolate(anchor_a, anchor_b, k, action.depth)
            if len(frames) != k:
                raise InterpolatorError(
                    f"interpolator returned {len(frames)} frames for run [{run.start}, {run.end}], expected {k}"
                )
            expected = list(range(run.start, run.end + 1))
            got = [f.frame_index for f in frames]
            if got != expected:
                raise InterpolatorError(
                    f"interpolator returned frame indices {got}, expected {expected}"
                )
            for frame in frames:
                repaired[frame.frame_index] = frame
        else:
            source_index = action.anchor_prev if action.anchor_prev is not None else action.anchor_next
            source = video[source_index]
            for index in range(run.start, run.end + 1):
                repaired[index] = source.with_frame_index(index)
    return repaired
