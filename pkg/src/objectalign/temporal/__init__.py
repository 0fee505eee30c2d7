"""Finite-trace temporal logic: parsing, monitor automata, and chain model checking."""

from .formulas import (
    Always,
    And,
    Atom,
    Eventually,
    FALSE,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    TRUE,
    Until,
    atoms,
    to_text,
)
from .parser import ParseError, parse_spec
from .monitor import MonitorDfa, MonitorTooLargeError, accepts_empty, progress, spec_to_monitor
from .automaton import (
    SatisfactionResult,
    VideoAutomaton,
    build_automaton,
    satisfaction_probability,
)

__all__ = [
    "Formula",
    "Atom",
    "Not",
    "And",
    "Or",
    "Implies",
    "Next",
    "Until",
    "Eventually",
    "Always",
    "TRUE",
    "FALSE",
    "atoms",
    "to_text",
    "parse_spec",
    "ParseError",
    "progress",
    "accepts_empty",
    "spec_to_monitor",
    "MonitorDfa",
    "MonitorTooLargeError",
    "VideoAutomaton",
    "build_automaton",
    "satisfaction_probability",
    "SatisfactionResult",
]
