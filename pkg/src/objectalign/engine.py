"""Joint per-transition consistency verdicts and the verification report.

A transition passes only the full conjunction: all four hard metric checks,
the per-dimension drift bounds, and the temporal check. The four sigmoid
probabilities are reported alongside as a soft confidence and feed the chain
model, but the binding decision is the hard conjunction.

The temporal check runs once per video. When it fails, blame is localized to
the transitions adjacent to the earliest violating frame so the repair loop
has a concrete target; when the label trace itself is fine and only the
accumulated transition probability falls short, the single least-reliable
transition is blamed instead.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Sequence

from .drift import DriftTolerances, DriftVerdict, DriftViolation, check_drift
from .features import FrameRecord
from .metrics import transition_features
from .temporal import Formula, SatisfactionResult, atoms, build_automaton, spec_to_monitor
from .thresholds import ThresholdVector, classify, per_metric_probability

__all__ = [
    "CHECK_NAMES",
    "ConsistencyVerdict",
    "InconsistentRun",
    "VerificationReport",
    "contiguous_runs",
    "evaluate_video",
]

CHECK_NAMES = ("iou", "smt", "lpips", "hist", "clip", "temporal")


@dataclass(frozen=True)
class ConsistencyVerdict:
    """Everything the engine decided about one frame-to-frame transition."""

    transition_index: int
    flags: tuple[bool, bool, bool, bool]
    probabilities: tuple[float, float, float, float]
    drift: DriftVerdict
    temporal_pass: bool
    consistent: bool

    def __post_init__(self):
        expected = all(self.flags) and self.drift.satisfied and self.temporal_pass
        if self.consistent != expected:
            raise ValueError(
                "consistent must equal the conjunction of metric flags, drift, and temporal checks"
            )

    @property
    def transition_probability(self) -> float:
        product = 1.0
        for p in self.probabilities:
            product *= p
        return product


@dataclass(frozen=True)
class InconsistentRun:
    """Maximal contiguous block of inconsistent transition indices."""

    start: int
    end: int

    def __post_init__(self):
        if not 0 <= self.start <= self.end:
            raise ValueError(f"invalid run bounds [{self.start}, {self.end}]")

    @property
    def k(self) -> int:
        """Number of frames the repair planner will replace."""
        return self.end - self.start + 1


def contiguous_runs(indices: Sequence[int]) -> tuple[InconsistentRun, ...]:
    """Group sorted transition indices into maximal contiguous runs."""
    ordered = sorted(set(int(i) for i in indices))
    runs: list[InconsistentRun] = []
    for index in ordered:
        if runs and index == runs[-1].end + 1:
            runs[-1] = InconsistentRun(runs[-1].start, index)
        else:
            runs.append(InconsistentRun(index, index))
    return tuple(runs)


@dataclass(frozen=True)
class VerificationReport:
    verdicts: tuple[ConsistencyVerdict, ...]
    inconsistent: tuple[int, ...]
    runs: tuple[InconsistentRun, ...]
    flag_rates: dict[str, float]
    iteration: int
    temporal: SatisfactionResult | None = None

    @property
    def transition_count(self) -> int:
        return len(self.verdicts)

    @property
    def is_consistent(self) -> bool:
        return not self.inconsistent

    def to_json_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "verdicts": [
                {
                    "transition": v.transition_index,
                    "flags": {
                        "clip": v.flags[0],
                        "hist": v.flags[1],
                        "iou": v.flags[2],
                        "lpips": v.flags[3],
                    },
                    "probabilities": list(v.probabilities),
                    "drift_satisfied": v.drift.satisfied,
                    "drift_violations": [
                        [viol.region, viol.dimension, viol.difference, viol.tolerance]
                        for viol in v.drift.violations
                    ],
                    "temporal_pass": v.temporal_pass,
                    "consistent": v.consistent,
                }
                for v in self.verdicts
            ],
            "inconsistent": list(self.inconsistent),
            "runs": [{"start": r.start, "end": r.end, "k": r.k} for r in self.runs],
            "flag_rates": {name: self.flag_rates[name] for name in CHECK_NAMES},
            "temporal": None
            if self.temporal is None
            else {
                "psi": self.temporal.psi,
                "sat_threshold": self.temporal.sat_threshold,
                "passes": self.temporal.passes,
                "earliest_violation": self.temporal.earliest_violation,
            },
        }

    @classmethod
    def from_json_dict(cls, obj: dict) -> "VerificationReport":
        verdicts = []
        for entry in obj["verdicts"]:
            flags = (
                bool(entry["flags"]["clip"]),
                bool(entry["flags"]["hist"]),
                bool(entry["flags"]["iou"]),
                bool(entry["flags"]["lpips"]),
            )
            violations = tuple(
                DriftViolation(region=item[0], dimension=int(item[1]), difference=float(item[2]), tolerance=float(item[3]))
                for item in entry["drift_violations"]
            )
            verdicts.append(
                ConsistencyVerdict(
                    transition_index=int(entry["transition"]),
                    flags=flags,
                    probabilities=tuple(float(p) for p in entry["probabilities"]),
                    drift=DriftVerdict(satisfied=bool(entry["drift_satisfied"]), violations=violations),
                    temporal_pass=bool(entry["temporal_pass"]),
                    consistent=bool(entry["consistent"]),
                )
            )
        stored = obj.get("temporal")
        temporal = None
        if stored is not None:
            earliest = stored["earliest_violation"]
            temporal = SatisfactionResult(
                psi=float(stored["psi"]),
                sat_threshold=float(stored["sat_threshold"]),
                passes=bool(stored["passes"]),
                earliest_violation=None if earliest is None else int(earliest),
            )
        return cls(
            verdicts=tuple(verdicts),
            inconsistent=tuple(int(i) for i in obj["inconsistent"]),
            runs=tuple(InconsistentRun(int(r["start"]), int(r["end"])) for r in obj["runs"]),
            flag_rates={name: float(obj["flag_rates"][name]) for name in CHECK_NAMES},
            iteration=int(obj["iteration"]),
            temporal=temporal,
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "VerificationReport":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json_dict(json.load(fh))


def evaluate_video(
    video: Sequence[FrameRecord],
    thresholds: ThresholdVector,
    tolerances: DriftTolerances,
    spec: Formula | None = None,
    sat_threshold: float = 0.9,
    prop_threshold: float = 0.5,
    iteration: int = 0,
) -> VerificationReport:
    """Verify every frame transition and assemble the report.

    Transition i compares frames i and i+1, so a video of T frames yields
    T-1 verdicts. Flag rates are percentages of transitions flagged by each
    individual check.
    """
    if len(video) < 2:
        raise ValueError(f"verification needs at least 2 frames, got {len(video)}")

    transition_count = len(video) - 1
    flags_per_transition: list[tuple[bool, bool, bool, bool]] = []
    probs_per_transition: list[tuple[float, float, float, float]] = []
    drift_per_transition: list[DriftVerdict] = []
    for i in range(transition_count):
        features = transition_features(video[i], video[i + 1])
        flags_per_transition.append(classify(features, thresholds))
        probs_per_transition.append(
            tuple(per_metric_probability(features, thresholds, k) for k in range(4))
        )
        drift_per_transition.append(check_drift(video[i], video[i + 1], tolerances))

    temporal_result: SatisfactionResult | None = None
    temporal_fail: set[int] = set()
    if spec is not None:
        available = set(video[0].prop_confidences)
        missing = sorted(atoms(spec) - available)
        if missing:
            raise ValueError(
                f"spec uses propositions {missing} not present in the video's props {sorted(available)}"
            )
        transition_probs = [
            p[0] * p[1] * p[2] * p[3] for p in probs_per_transition
        ]
        automaton = build_automaton(video, prop_threshold, transition_probs)
        monitor = spec_to_monitor(spec, sorted(atoms(spec)))
        temporal_result = SatisfactionResult.evaluate(automaton, monitor, sat_threshold)
        if not temporal_result.passes and temporal_result.earliest_violation is not None:
            # Blame lands on the transitions adjacent to the first frame at
            # which the label trace is irrecoverably rejected, giving the
            # repair planner a concrete target. A probability shortfall with
            # an accepted trace has no such location: it is reported at the
            # video level only and flags no individual transition.
            ev = temporal_result.earliest_violation
            temporal_fail = {t for t in (ev - 1, ev) if 0 <= t <= transition_count - 1}

    verdicts = []
    for i in range(transition_count):
        temporal_pass = i not in temporal_fail
        consistent = (
            all(flags_per_transition[i])
            and drift_per_transition[i].satisfied
            and temporal_pass
        )
        verdicts.append(
            ConsistencyVerdict(
                transition_index=i,
                flags=flags_per_transition[i],
                probabilities=probs_per_transition[i],
                drift=drift_per_transition[i],
                temporal_pass=temporal_pass,
                consistent=consistent,
            )
        )

    inconsistent = tuple(v.transition_index for v in verdicts if not v.consistent)
    runs = contiguous_runs(inconsistent)
    percent = 100.0 / transition_count
    flag_rates = {
        "iou": sum(1 for v in verdicts if not v.flags[2]) * percent,
        "smt": sum(1 for v in verdicts if not v.drift.satisfied) * percent,
        "lpips": sum(1 for v in verdicts if not v.flags[3]) * percent,
        "hist": sum(1 for v in verdicts if not v.flags[1]) * percent,
        "clip": sum(1 for v in verdicts if not v.flags[0]) * percent,
        "temporal": sum(1 for v in verdicts if not v.temporal_pass) * percent,
    }
    return VerificationReport(
        verdicts=tuple(verdicts),
        inconsistent=inconsistent,
        runs=runs,
        flag_rates=flag_rates,
        iteration=iteration,
        temporal=temporal_result,
    )
