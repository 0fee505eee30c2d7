"""Probabilistic chain model of a video and its spec satisfaction probability.

A video with frames 0..T-1 becomes a chain: from frame i the run proceeds to
frame i+1 with probability p_i or drops into an absorbing failure state with
probability 1 - p_i; the final frame is absorbing. Each frame carries a
Boolean label per proposition (confidence >= threshold, inclusive). The
satisfaction probability is the chance that a run reaches the final frame and
the label trace read along the way is accepted by the monitor at termination;
runs that fail out count as violating no matter what they read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..features import FrameRecord
from .monitor import MonitorDfa

__all__ = [
    "VideoAutomaton",
    "build_automaton",
    "satisfaction_probability",
    "SatisfactionResult",
]


@dataclass(frozen=True)
class VideoAutomaton:
    """Frame labels plus the proceed probabilities of the chain."""

    props: tuple[str, ...]
    labels: tuple[tuple[bool, ...], ...]
    transition_probs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "props", tuple(self.props))
        object.__setattr__(
            self, "labels", tuple(tuple(bool(b) for b in row) for row in self.labels)
        )
        object.__setattr__(
            self, "transition_probs", tuple(float(p) for p in self.transition_probs)
        )
        if not self.labels:
            raise ValueError("automaton needs at least one frame")
        for row in self.labels:
            if len(row) != len(self.props):
                raise ValueError("every label row must cover every proposition")
        if len(self.transition_probs) != len(self.labels) - 1:
            raise ValueError(
                f"need {len(self.labels) - 1} transition probabilities, got {len(self.transition_probs)}"
            )
        for p in self.transition_probs:
            if not math.isfinite(p) or not 0.0 <= p <= 1.0:
                raise ValueError(f"transition probability {p!r} outside [0, 1]")

    @property
    def frame_count(self) -> int:
        return len(self.labels)


def build_automaton(
    video: Sequence[FrameRecord],
    prop_threshold: float = 0.5,
    transition_probs: Sequence[float] | None = None,
) -> VideoAutomaton:
    """Label frames by thresholding prop confidences (inclusive at the bound).

    With no probabilities supplied every transition proceeds surely, which
    reduces the chain to a pure trace check.
    """
    if not video:
        raise ValueError("cannot build an automaton from an empty video")
    if not 0.0 <= prop_threshold <= 1.0:
        raise ValueError(f"prop_threshold {prop_threshold!r} outside [0, 1]")
    props = tuple(sorted(video[0].prop_confidences))
    labels = []
    for record in video:
        if set(record.prop_confidences) != set(props):
            raise ValueError(
                f"frame {record.frame_index}: prop names differ from frame 0"
            )
        labels.append(
            tuple(record.prop_confidences[name] >= prop_threshold for name in props)
        )
    if transition_probs is None:
        transition_probs = (1.0,) * (len(video) - 1)
    return VideoAutomaton(
        props=props, labels=tuple(labels), transition_probs=tuple(transition_probs)
    )


def _project(automaton: VideoAutomaton, monitor: MonitorDfa) -> list[int]:
    """Per-frame monitor valuation indices for the monitor's alphabet."""
    positions = []
    for name in monitor.alphabet:
        try:
            positions.append(automaton.props.index(name))
        except ValueError:
            raise ValueError(
                f"monitor proposition {name!r} is not among the automaton propositions {list(automaton.props)}"
            ) from None
    indices = []
    for row in automaton.labels:
        indices.append(monitor.valuation_index([row[p] for p in positions]))
    return indices


def satisfaction_probability(
    automaton: VideoAutomaton, monitor: MonitorDfa
) -> tuple[float, int | None]:
    """Exact satisfaction probability and the earliest violating frame.

    Computed by backward induction over the product of frame index and
    monitor state: value(i, q) is the probability of eventual acceptance when
    frame i is about to be read in monitor state q. The failure state
    contributes zero. Also runs the monitor on the actual label trace and
    reports the first frame at which it enters a rejecting dead state, or
    None if that never happens.
    """
    frame_count = automaton.frame_count
    symbol = _project(automaton, monitor)

    value = np.zeros((frame_count, monitor.state_count))
    for q in range(monitor.state_count):
        value[frame_count - 1, q] = 1.0 if monitor.accepting[monitor.transitions[q][symbol[frame_count - 1]]] else 0.0
    for i in range(frame_count - 2, -1, -1):
        p = automaton.transition_probs[i]
        for q in range(monitor.state_count):
            value[i, q] = p * value[i + 1, monitor.transitions[q][symbol[i]]]
    psi = float(value[0, monitor.initial])

    earliest: int | None = None
    state = monitor.initial
    for i in range(frame_count):
        state = monitor.transitions[state][symbol[i]]
        if monitor.rejecting[state]:
            earliest = i
            break
    return psi, earliest


@dataclass(frozen=True)
class SatisfactionResult:
    psi: float
    sat_threshold: float
    passes: bool
    earliest_violation: int | None

    def __post_init__(self):
        if self.passes != (self.psi >= self.sat_threshold):
            raise ValueError("passes must hold exactly when psi >= sat_threshold")

    @classmethod
    def evaluate(
        cls, automaton: VideoAutomaton, monitor: MonitorDfa, sat_threshold: float
    ) -> "SatisfactionResult":
        if not 0.0 <= sat_threshold <= 1.0:
            raise ValueError(f"sat_threshold {sat_threshold!r} outside [0, 1]")
        psi, earliest = satisfaction_probability(automaton, monitor)
        return cls(
            psi=psi,
            sat_threshold=sat_threshold,
            passes=psi >= sat_threshold,
            earliest_violation=earliest,
        )
