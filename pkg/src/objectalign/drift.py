"""Per-dimension semantic drift bounds between adjacent frames.

The check is a ground conjunction: every foreground embedding dimension may
move by at most eps_fg between the two frames, and every background dimension
by at most eps_bg, both bounds inclusive. The same constraint set can be
emitted as an SMT-LIB script (linear real arithmetic) for cross-checking with
an external solver.
"""

from __future__ import annotations

import math
import shutil
import subprocess
import tempfile
from dataclasses import dataclass
from decimal import Decimal
from pathlib import Path
from typing import Sequence

import numpy as np

from .features import FrameRecord

__all__ = [
    "DriftTolerances",
    "DriftViolation",
    "DriftVerdict",
    "check_drift",
    "calibrate_tolerances",
    "emit_smtlib",
    "run_smtlib_solver",
    "TOLERANCE_FLOOR",
]

TOLERANCE_FLOOR = 1e-6


@dataclass(frozen=True)
class DriftTolerances:
    """Inclusive per-dimension drift bounds for foreground and background."""

    eps_fg: float
    eps_bg: float

    def __post_init__(self):
        for name in ("eps_fg", "eps_bg"):
            value = float(getattr(self, name))
            if not math.isfinite(value) or value <= 0.0:
                raise ValueError(f"{name} must be finite and > 0, got {value!r}")
            object.__setattr__(self, name, value)


@dataclass(frozen=True)
class DriftViolation:
    """One dimension exceeding its bound: region is 'fg' or 'bg'."""

    region: str
    dimension: int
    difference: float
    tolerance: float


@dataclass(frozen=True)
class DriftVerdict:
    satisfied: bool
    violations: tuple[DriftViolation, ...]

    def __post_init__(self):
        object.__setattr__(self, "violations", tuple(self.violations))
        if self.satisfied != (len(self.violations) == 0):
            raise ValueError("satisfied must hold exactly when there are no violations")


def _region_diffs(fi: FrameRecord, fj: FrameRecord, region: str) -> np.ndarray:
    a = fi.fg_embedding if region == "fg" else fi.bg_embedding
    b = fj.fg_embedding if region == "fg" else fj.bg_embedding
    if a.size != b.size:
        raise ValueError(
            f"{region} embedding length mismatch: frame {fi.frame_index} has {a.size}, "
            f"frame {fj.frame_index} has {b.size}"
        )
    return a - b


def check_drift(fi: FrameRecord, fj: FrameRecord, tolerances: DriftTolerances) -> DriftVerdict:
    """Evaluate the inclusive per-dimension bounds; list violations fg-first.

    Violations are ordered by region (foreground before background, matching
    the conjunct order of the constraint) and then by dimension index.
    """
    violations: list[DriftViolation] = []
    for region, eps in (("fg", tolerances.eps_fg), ("bg", tolerances.eps_bg)):
        diffs = _region_diffs(fi, fj, region)
        for dim in np.nonzero(np.abs(diffs) > eps)[0]:
            violations.append(
                DriftViolation(
                    region=region,
                    dimension=int(dim),
                    difference=float(abs(diffs[dim])),
                    tolerance=eps,
                )
            )
    return DriftVerdict(satisfied=not violations, violations=tuple(violations))


def _order_statistic(values: Sequence[float], quantile: float) -> float:
    """Smallest value covering at least `quantile` of the sample."""
    ordered = sorted(float(v) for v in values)
    index = math.ceil(quantile * len(ordered)) - 1
    index = min(max(index, 0), len(ordered) - 1)
    return ordered[index]


def calibrate_tolerances(
    pairs: Sequence[tuple[FrameRecord, FrameRecord]], quantile: float = 0.99
) -> DriftTolerances:
    """Derive tolerances from known-consistent frame pairs.

    Takes the per-pair maximum absolute per-dimension drift, the requested
    quantile of those maxima, and widens by 5%. A floor of 1e-6 keeps the
    bounds positive even for identical pairs. At quantile 1.0 every supplied
    pair is guaranteed to satisfy the calibrated bounds.
    """
    if not pairs:
        raise ValueError("calibration needs at least one frame pair")
    if not 0.0 < quantile <= 1.0:
        raise ValueError(f"quantile must lie in (0, 1], got {quantile!r}")
    fg_maxima = []
    bg_maxima = []
    for fi, fj in pairs:
        fg_maxima.append(float(np.max(np.abs(_region_diffs(fi, fj, "fg")))))
        bg_maxima.append(float(np.max(np.abs(_region_diffs(fi, fj, "bg")))))
    eps_fg = max(_order_statistic(fg_maxima, quantile) * 1.05, TOLERANCE_FLOOR)
    eps_bg = max(_order_statistic(bg_maxima, quantile) * 1.05, TOLERANCE_FLOOR)
    return DriftTolerances(eps_fg=eps_fg, eps_bg=eps_bg)


def _smt_decimal(value: float) -> str:
    """Render a float as an exact SMT-LIB real literal."""
    if value < 0:
        return f"(- {_smt_decimal(-value)})"
    text = format(Decimal(value), "f")
    if "." not in text:
        text += ".0"
    return text


def emit_smtlib(fi: FrameRecord, fj: FrameRecord, tolerances: DriftTolerances) -> str:
    """Serialize the drift constraints as a QF_LRA script ending in (check-sat).

    Each absolute-value bound |d| <= eps becomes the pair of linear
    inequalities d <= eps and -d <= eps inside a single assert, one assert per
    dimension per region. The differences are the exact float values the
    direct check compares, so an exact-rational solver reaches the same
    verdict as `check_drift`.
    """
    lines = [
        f"; per-dimension drift bounds for frames {fi.frame_index} -> {fj.frame_index}",
        "(set-logic QF_LRA)",
        f"(define-fun eps_fg () Real {_smt_decimal(tolerances.eps_fg)})",
        f"(define-fun eps_bg () Real {_smt_decimal(tolerances.eps_bg)})",
    ]
    for region in ("fg", "bg"):
        diffs = _region_diffs(fi, fj, region)
        eps_name = f"eps_{region}"
        for dim, diff in enumerate(diffs):
            literal = _smt_decimal(float(diff))
            lines.append(
                f"(assert (and (<= {literal} {eps_name}) (<= (- {literal}) {eps_name}))) ; {region} dim {dim}"
            )
    lines.append("(check-sat)")
    return "\n".join(lines) + "\n"


def run_smtlib_solver(script: str, command: str | Sequence[str]) -> str:
    """Feed a script to `<solver> <file>` and return 'sat' or 'unsat'.

    Any other stdout, a missing binary, or a crash raises RuntimeError.
    """
    if isinstance(command, str):
        argv = command.split()
    else:
        argv = list(command)
    if not argv:
        raise ValueError("empty solver command")
    if shutil.which(argv[0]) is None:
        raise RuntimeError(f"solver binary not found: {argv[0]!r}")
    with tempfile.NamedTemporaryFile("w", suffix=".smt2", delete=False) as fh:
        fh.write(script)
        path = fh.name
    try:
        result = subprocess.run(
            argv + [path], capture_output=True, text=True, timeout=60
        )
        answer = result.stdout.strip().split()
        if answer and answer[0] in ("sat", "unsat"):
            return answer[0]
        raise RuntimeError(
            f"solver produced no sat/unsat verdict (exit {result.returncode}): "
            f"{result.stdout[:200]!r} {result.stderr[:200]!r}"
        )
    finally:
        Path(path).unlink(missing_ok=True)
