"""Monitor automata built by formula progression.

Consuming one trace position rewrites a formula into the residual obligation
on the remaining suffix. A residual is a Boolean combination of opaque
leaves — atoms and temporal-rooted subterms — and both further progression
and end-of-trace acceptance depend only on that Boolean function, never on
how it happens to be written. States are therefore the truth-table canonical
forms of the residuals: flatten/dedupe alone would let alternating and/or
towers grow forever, while the canonical form draws states from the finite
space of functions over the leaf basis, so construction always terminates.

Strong next is the one delicate case: the residual of ``X a`` is
``a & F true``, because ``F true`` is exactly "at least one position remains".
The marker evaluates false at end of trace and dissolves to true after one
further step, so the next-operator keeps its strong semantics through
simplification.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Mapping, Sequence

from .formulas import (
    FALSE,
    TRUE,
    Always,
    And,
    Atom,
    Eventually,
    FalseConst,
    Formula,
    Implies,
    Next,
    Not,
    Or,
    TrueConst,
    Until,
    atoms,
    to_text,
)

__all__ = [
    "DEFAULT_STATE_CAP",
    "MonitorTooLargeError",
    "MonitorDfa",
    "progress",
    "accepts_empty",
    "spec_to_monitor",
]

DEFAULT_STATE_CAP = 4096


class MonitorTooLargeError(RuntimeError):
    def __init__(self, cap: int, spec: Formula):
        super().__init__(
            f"monitor construction exceeded the state cap of {cap} for spec {to_text(spec)!r}"
        )
        self.cap = cap


def _flatten(formula: Formula, node_type) -> list[Formula]:
    if isinstance(formula, node_type):
        return _flatten(formula.left, node_type) + _flatten(formula.right, node_type)
    return [formula]


def _fold(parts: list[Formula], node_type) -> Formula:
    result = parts[-1]
    for part in reversed(parts[:-1]):
        result = node_type(part, result)
    return result


def _normalize(parts: list[Formula], node_type, identity: Formula, dominator: Formula) -> Formula:
    flat: list[Formula] = []
    for part in parts:
        flat.extend(_flatten(part, node_type))
    unique: dict[Formula, None] = {}
    for part in flat:
        if part == dominator:
            return dominator
        if part == identity:
            continue
        unique.setdefault(part, None)
    if not unique:
        return identity
    ordered = sorted(unique, key=to_text)
    return _fold(ordered, node_type)


def _and(*parts: Formula) -> Formula:
    return _normalize(list(parts), And, identity=TRUE, dominator=FALSE)


def _or(*parts: Formula) -> Formula:
    return _normalize(list(parts), Or, identity=FALSE, dominator=TRUE)


def _not(part: Formula) -> Formula:
    if isinstance(part, TrueConst):
        return FALSE
    if isinstance(part, FalseConst):
        return TRUE
    if isinstance(part, Not):
        return part.operand
    return Not(part)


_ANY_FUTURE = Eventually(TRUE)


def progress(formula: Formula, valuation: Mapping[str, bool]) -> Formula:
    """Residual obligation after consuming one position labeled `valuation`.

    Temporal operators unroll through their fixpoint identities:
    ``F a = a | X F a``, ``G a = a & weak-next G a``, and
    ``a U b = b | (a & X (a U b))``.
    """
    if isinstance(formula, Atom):
        try:
            return TRUE if valuation[formula.name] else FALSE
        except KeyError:
            raise ValueError(f"valuation is missing proposition {formula.name!r}") from None
    if isinstance(formula, (TrueConst, FalseConst)):
        return formula
    if isinstance(formula, Not):
        return _not(progress(formula.operand, valuation))
    if isinstance(formula, And):
        return _and(progress(formula.left, valuation), progress(formula.right, valuation))
    if isinstance(formula, Or):
        return _or(progress(formula.left, valuation), progress(formula.right, valuation))
    if isinstance(formula, Implies):
        return _or(_not(progress(formula.left, valuation)), progress(formula.right, valuation))
    if isinstance(formula, Next):
        return _and(formula.operand, _ANY_FUTURE)
    if isinstance(formula, Eventually):
        return _or(progress(formula.operand, valuation), formula)
    if isinstance(formula, Always):
        return _and(progress(formula.operand, valuation), formula)
    if isinstance(formula, Until):
        return _or(
            progress(formula.right, valuation),
            _and(progress(formula.left, valuation), formula),
        )
    raise TypeError(f"unknown formula node {formula!r}")


def _combo_leaves(formula: Formula, seen: dict[Formula, None]) -> None:
    """Collect the opaque leaves of a residual in first-visit order.

    Atoms and temporal-rooted nodes are units: progression rewrites them as
    wholes, so canonicalization must never look inside them.
    """
    if isinstance(formula, (TrueConst, FalseConst)):
        return
    if isinstance(formula, (Atom, Next, Eventually, Always, Until)):
        seen.setdefault(formula, None)
        return
    if isinstance(formula, Not):
        _combo_leaves(formula.operand, seen)
        return
    if isinstance(formula, (And, Or, Implies)):
        _combo_leaves(formula.left, seen)
        _combo_leaves(formula.right, seen)
        return
    raise TypeError(f"unknown formula node {formula!r}")


def _combo_value(formula: Formula, assignment: Mapping[Formula, bool]) -> bool:
    if isinstance(formula, TrueConst):
        return True
    if isinstance(formula, FalseConst):
        return False
    value = assignment.get(formula)
    if value is not None:
        return value
    if isinstance(formula, Not):
        return not _combo_value(formula.operand, assignment)
    if isinstance(formula, And):
        return _combo_value(formula.left, assignment) and _combo_value(formula.right, assignment)
    if isinstance(formula, Or):
        return _combo_value(formula.left, assignment) or _combo_value(formula.right, assignment)
    if isinstance(formula, Implies):
        return (not _combo_value(formula.left, assignment)) or _combo_value(
            formula.right, assignment
        )
    raise TypeError(f"unknown formula node {formula!r}")


def _canonical(formula: Formula) -> Formula:
    """Rewrite a residual as the canonical DNF of its Boolean function.

    Leaves that never change the outcome are dropped, the rest are ordered by
    their rendering, and the surviving minterms are folded in sorted order, so
    every formula computing the same function of the same leaves collapses to
    the identical tree.
    """
    seen: dict[Formula, None] = {}
    _combo_leaves(formula, seen)
    leaves = sorted(seen, key=to_text)
    table: dict[tuple[bool, ...], bool] = {}
    for bits in itertools.product((False, True), repeat=len(leaves)):
        table[bits] = _combo_value(formula, dict(zip(leaves, bits)))
    relevant = []
    for position in range(len(leaves)):
        for bits, value in table.items():
            flipped = bits[:position] + (not bits[position],) + bits[position + 1 :]
            if table[flipped] != value:
                relevant.append(position)
                break
    if not relevant:
        return TRUE if table[(False,) * len(leaves)] else FALSE
    kept = [leaves[position] for position in relevant]
    minterms = sorted(
        {tuple(bits[position] for position in relevant) for bits, value in table.items() if value}
    )
    clauses = []
    for row in minterms:
        parts = [leaf if bit else Not(leaf) for leaf, bit in zip(kept, row)]
        clauses.append(_fold(parts, And))
    return _fold(clauses, Or)


def accepts_empty(formula: Formula) -> bool:
    """Terminal evaluation: does the residual hold with no positions left?

    Atoms and the strong operators (X, F, U) need a position, so they fail;
    an always-obligation is vacuously met.
    """
    if isinstance(formula, TrueConst):
        return True
    if isinstance(formula, (FalseConst, Atom, Next, Eventually, Until)):
        return False
    if isinstance(formula, Not):
        return not accepts_empty(formula.operand)
    if isinstance(formula, And):
        return accepts_empty(formula.left) and accepts_empty(formula.right)
    if isinstance(formula, Or):
        return accepts_empty(formula.left) or accepts_empty(formula.right)
    if isinstance(formula, Implies):
        return (not accepts_empty(formula.left)) or accepts_empty(formula.right)
    if isinstance(formula, Always):
        return True
    raise TypeError(f"unknown formula node {formula!r}")


@dataclass(frozen=True)
class MonitorDfa:
    """Deterministic monitor over the powerset alphabet of the propositions.

    Valuations are encoded as integers with bit i carrying the truth of
    ``alphabet[i]``. ``rejecting`` marks dead states: no accepting state is
    reachable from them, so entering one settles the verdict.
    """

    alphabet: tuple[str, ...]
    states: tuple[Formula, ...]
    transitions: tuple[tuple[int, ...], ...]
    accepting: tuple[bool, ...]
    rejecting: tuple[bool, ...]
    initial: int = 0

    @property
    def state_count(self) -> int:
        return len(self.states)

    def valuation_index(self, bits: Sequence[bool]) -> int:
        if len(bits) != len(self.alphabet):
            raise ValueError(
                f"valuation has {len(bits)} entries, alphabet has {len(self.alphabet)}"
            )
        index = 0
        for position, bit in enumerate(bits):
            if bit:
                index |= 1 << position
        return index

    def step(self, state: int, bits: Sequence[bool]) -> int:
        return self.transitions[state][self.valuation_index(bits)]

    def run(self, trace: Sequence[Sequence[bool]]) -> list[int]:
        """States entered after each consumed position (length = len(trace))."""
        states = []
        current = self.initial
        for bits in trace:
            current = self.step(current, bits)
            states.append(current)
        return states

    def accepts(self, trace: Sequence[Sequence[bool]]) -> bool:
        current = self.initial
        for bits in trace:
            current = self.step(current, bits)
        return self.accepting[current]


def spec_to_monitor(
    spec: Formula, alphabet: Sequence[str], state_cap: int = DEFAULT_STATE_CAP
) -> MonitorDfa:
    """Compile a formula into its progression DFA over 2^|alphabet| symbols."""
    alphabet = tuple(alphabet)
    if len(set(alphabet)) != len(alphabet):
        raise ValueError("alphabet contains duplicate propositions")
    unknown = sorted(atoms(spec) - set(alphabet))
    if unknown:
        raise ValueError(f"spec uses propositions outside the alphabet: {unknown}")
    if state_cap < 1:
        raise ValueError("state_cap must be >= 1")

    # Valuation index i carries the truth of alphabet[j] in bit j.
    valuations = [
        {name: bool(index >> position & 1) for position, name in enumerate(alphabet)}
        for index in range(2 ** len(alphabet))
    ]

    initial = _canonical(spec)
    index_of: dict[Formula, int] = {initial: 0}
    states: list[Formula] = [initial]
    transitions: list[list[int]] = []
    frontier = [initial]
    while frontier:
        next_frontier: list[Formula] = []
        for state in frontier:
            row: list[int] = []
            for valuation in valuations:
                residual = _canonical(progress(state, valuation))
                if residual not in index_of:
                    if len(states) >= state_cap:
                        raise MonitorTooLargeError(state_cap, spec)
                    index_of[residual] = len(states)
                    states.append(residual)
                    next_frontier.append(residual)
                row.append(index_of[residual])
            transitions.append(row)
        frontier = next_frontier

    accepting = [accepts_empty(state) for state in states]

    reverse: list[set[int]] = [set() for _ in states]
    for source, row in enumerate(transitions):
        for target in row:
            reverse[target].add(source)
    live = [flag for flag in accepting]
    stack = [i for i, flag in enumerate(accepting) if flag]
    while stack:
        node = stack.pop()
        for predecessor in reverse[node]:
            if not live[predecessor]:
                live[predecessor] = True
                stack.append(predecessor)
    rejecting = [not flag for flag in live]

    return MonitorDfa(
        alphabet=alphabet,
        states=tuple(states),
        transitions=tuple(tuple(row) for row in transitions),
        accepting=tuple(accepting),
        rejecting=tuple(rejecting),
        initial=0,
    )
