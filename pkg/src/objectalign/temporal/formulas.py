"""Syntax tree for finite-trace temporal formulas.

Nodes are frozen dataclasses, so structural equality and hashing come for
free and formulas can serve directly as automaton states. The two constant
nodes are internal: they arise from simplification during monitor
construction and have no surface syntax.
"""

from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "Formula",
    "Atom",
    "TrueConst",
    "FalseConst",
    "TRUE",
    "FALSE",
    "Not",
    "And",
    "Or",
    "Implies",
    "Next",
    "Until",
    "Eventually",
    "Always",
    "atoms",
    "to_text",
]


@dataclass(frozen=True)
class Formula:
    def __str__(self) -> str:
        return to_text(self)


@dataclass(frozen=True)
class Atom(Formula):
    name: str


@dataclass(frozen=True)
class TrueConst(Formula):
    pass


@dataclass(frozen=True)
class FalseConst(Formula):
    pass


TRUE = TrueConst()
FALSE = FalseConst()


@dataclass(frozen=True)
class Not(Formula):
    operand: Formula


@dataclass(frozen=True)
class And(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Or(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Implies(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Next(Formula):
    """Strong next: requires that a next position exists."""

    operand: Formula


@dataclass(frozen=True)
class Until(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class Eventually(Formula):
    operand: Formula


@dataclass(frozen=True)
class Always(Formula):
    operand: Formula


def atoms(formula: Formula) -> frozenset[str]:
    """All proposition names occurring in the formula."""
    if isinstance(formula, Atom):
        return frozenset([formula.name])
    if isinstance(formula, (TrueConst, FalseConst)):
        return frozenset()
    if isinstance(formula, (Not, Next, Eventually, Always)):
        return atoms(formula.operand)
    if isinstance(formula, (And, Or, Implies, Until)):
        return atoms(formula.left) | atoms(formula.right)
    raise TypeError(f"unknown formula node {formula!r}")


# Printing levels; higher binds tighter. Binary connectives parenthesize the
# child on their non-associating side at equal level so that parsing the
# printed text rebuilds the identical tree.
_LEVEL_IMPLIES = 0
_LEVEL_OR = 1
_LEVEL_AND = 2
_LEVEL_UNTIL = 3
_LEVEL_UNARY = 4
_LEVEL_ATOM = 5


def _fmt(formula: Formula) -> tuple[str, int]:
    if isinstance(formula, Atom):
        return formula.name, _LEVEL_ATOM
    if isinstance(formula, TrueConst):
        return "true", _LEVEL_ATOM
    if isinstance(formula, FalseConst):
        return "false", _LEVEL_ATOM
    if isinstance(formula, Not):
        return f"!{_wrap(formula.operand, _LEVEL_UNARY)}", _LEVEL_UNARY
    if isinstance(formula, Next):
        return f"X {_wrap(formula.operand, _LEVEL_UNARY)}", _LEVEL_UNARY
    if isinstance(formula, Eventually):
        return f"F {_wrap(formula.operand, _LEVEL_UNARY)}", _LEVEL_UNARY
    if isinstance(formula, Always):
        return f"G {_wrap(formula.operand, _LEVEL_UNARY)}", _LEVEL_UNARY
    if isinstance(formula, And):
        left = _wrap(formula.left, _LEVEL_AND)
        right = _wrap(formula.right, _LEVEL_AND + 1)
        return f"{left} & {right}", _LEVEL_AND
    if isinstance(formula, Or):
        left = _wrap(formula.left, _LEVEL_OR)
        right = _wrap(formula.right, _LEVEL_OR + 1)
        return f"{left} | {right}", _LEVEL_OR
    if isinstance(formula, Until):
        left = _wrap(formula.left, _LEVEL_UNTIL + 1)
        right = _wrap(formula.right, _LEVEL_UNTIL)
        return f"{left} U {right}", _LEVEL_UNTIL
    if isinstance(formula, Implies):
        left = _wrap(formula.left, _LEVEL_IMPLIES + 1)
        right = _wrap(formula.right, _LEVEL_IMPLIES)
        return f"{left} -> {right}", _LEVEL_IMPLIES
    raise TypeError(f"unknown formula node {formula!r}")


def _wrap(formula: Formula, minimum_level: int) -> str:
    text, level = _fmt(formula)
    if level < minimum_level:
        return f"({text})"
    return text


def to_text(formula: Formula) -> str:
    """Render with minimal parentheses; parsing the result rebuilds the tree."""
    return _fmt(formula)[0]
