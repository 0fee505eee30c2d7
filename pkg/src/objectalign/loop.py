"""Closed verification-repair loop.

Verify, and if any transition fails, plan repairs for the flagged runs,
execute them, and verify again — up to a configured number of repair rounds.
The loop ends in one of three states: the video verifies clean, the repair
budget runs out, or no trustworthy anchor frames remain.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .drift import DriftTolerances
from .engine import VerificationReport, evaluate_video
from .features import FrameRecord
from .repair import (
    BuiltinInterpolator,
    Interpolator,
    InterpolatorError,
    NoAnchorsError,
    execute_repairs,
    plan_repairs,
)
from .temporal import Formula
from .thresholds import ThresholdVector

__all__ = ["LoopStatus", "PipelineConfig", "LoopResult", "run_loop"]


class LoopStatus(str, Enum):
    CONVERGED = "converged"
    MAX_ITERATIONS = "max_iterations"
    NO_ANCHORS = "no_anchors"


@dataclass(frozen=True)
class PipelineConfig:
    """Everything the loop needs besides the video itself."""

    thresholds: ThresholdVector
    tolerances: DriftTolerances
    spec: Formula | None = None
    sat_threshold: float = 0.9
    prop_threshold: float = 0.5
    max_iterations: int = 10
    interpolator: Interpolator = field(default_factory=BuiltinInterpolator)

    def __post_init__(self):
        if self.max_iterations < 1:
            raise ValueError(f"max_iterations must be >= 1, got {self.max_iterations}")


@dataclass(frozen=True)
class LoopResult:
    """Outcome of the loop: final status, video, and the report trail."""

    status: LoopStatus
    video: tuple[FrameRecord, ...]
    reports: tuple[VerificationReport, ...]

    def __post_init__(self):
        if not self.reports:
            raise ValueError("a loop result carries at least the initial report")

    @property
    def iterations_used(self) -> int:
        """Number of repair rounds actually executed."""
        return len(self.reports) - 1

    @property
    def final_report(self) -> VerificationReport:
        return self.reports[-1]


def _evaluate(video, config: PipelineConfig, iteration: int) -> VerificationReport:
    return evaluate_video(
        video,
        config.thresholds,
        config.tolerances,
        spec=config.spec,
        sat_threshold=config.sat_threshold,
        prop_threshold=config.prop_threshold,
        iteration=iteration,
    )


def run_loop(video: Sequence[FrameRecord], config: PipelineConfig) -> LoopResult:
    """Run verify-repair rounds until clean, out of budget, or unanchored."""
    current = list(video)
    reports = [_evaluate(current, config, iteration=0)]
    if reports[0].is_consistent:
        return LoopResult(LoopStatus.CONVERGED, tuple(current), tuple(reports))

    for iteration in range(1, config.max_iterations + 1):
        try:
            actions, _ = plan_repairs(reports[-1], len(current))
        except NoAnchorsError:
            return LoopResult(LoopStatus.NO_ANCHORS, tuple(current), tuple(reports))
        try:
            current = execute_repairs(current, actions, config.interpolator)
        except InterpolatorError as exc:
            raise InterpolatorError(f"repair iteration {iteration}: {exc}") from exc
        reports.append(_evaluate(current, config, iteration=iteration))
        if reports[-1].is_consistent:
            return LoopResult(LoopStatus.CONVERGED, tuple(current), tuple(reports))

    return LoopResult(LoopStatus.MAX_ITERATIONS, tuple(current), tuple(reports))
