"""Sanity checks pinning the test oracles themselves to hand-derived values.

If an oracle drifts, every downstream agreement test becomes meaningless, so
the frozen values here were worked out by hand before the implementation
tests were written.
"""

import numpy as np
import pytest

from objectalign import BinaryMask
from objectalign.temporal import Always, And, Atom, Eventually, Next, Until, parse_spec

from oracles import (
    brute_drift,
    dense_iou,
    depth_by_doubling,
    enumerate_psi,
    fd_gradient,
    ltl_eval,
    reference_loss,
)


def _trace(*rows):
    return [dict(row) for row in rows]


def test_ltl_eval_atoms_and_booleans():
    trace = _trace({"a": True, "b": False})
    assert ltl_eval(Atom("a"), trace)
    assert not ltl_eval(Atom("b"), trace)
    assert ltl_eval(parse_spec("a | b"), trace)
    assert not ltl_eval(parse_spec("a & b"), trace)
    assert ltl_eval(parse_spec("b -> a"), trace)
    assert ltl_eval(parse_spec("!b"), trace)


def test_ltl_eval_always_and_eventually():
    a_then_not = _trace({"a": True}, {"a": True}, {"a": False})
    assert not ltl_eval(Always(Atom("a")), a_then_not)
    assert ltl_eval(Always(Atom("a")), a_then_not[:2])
    assert ltl_eval(Eventually(Atom("a")), _trace({"a": False}, {"a": False}, {"a": True}))
    assert not ltl_eval(Eventually(Atom("a")), _trace({"a": False}, {"a": False}))


def test_ltl_eval_strong_next_is_false_at_the_end():
    trace = _trace({"a": True}, {"a": True})
    assert ltl_eval(Next(Atom("a")), trace)
    assert not ltl_eval(Next(Atom("a")), trace, position=1)


def test_ltl_eval_until():
    # a holds until b appears at position 2.
    trace = _trace({"a": True, "b": False}, {"a": True, "b": False}, {"a": False, "b": True})
    assert ltl_eval(Until(Atom("a"), Atom("b")), trace)
    # a gives out before b ever holds.
    broken = _trace({"a": True, "b": False}, {"a": False, "b": False}, {"a": False, "b": True})
    assert not ltl_eval(Until(Atom("a"), Atom("b")), broken)
    # b already true now: left side irrelevant.
    assert ltl_eval(Until(Atom("a"), Atom("b")), _trace({"a": False, "b": True}))


def test_enumerate_psi_matches_hand_computation():
    # Three frames, a true throughout, proceed probabilities 0.9 and 0.8:
    # only the all-proceed outcome satisfies G a, so psi = 0.9 * 0.8.
    trace = _trace({"a": True}, {"a": True}, {"a": True})
    psi = enumerate_psi(Always(Atom("a")), trace, [0.9, 0.8])
    assert psi == pytest.approx(0.72, abs=1e-15)


def test_enumerate_psi_rejected_trace_is_zero():
    trace = _trace({"a": True}, {"a": False}, {"a": True})
    assert enumerate_psi(Always(Atom("a")), trace, [0.9, 0.8]) == 0.0


def test_enumerate_psi_certain_chain():
    trace = _trace({"a": True}, {"a": True})
    assert enumerate_psi(Eventually(Atom("a")), trace, [1.0]) == 1.0


def test_dense_iou_hand_values():
    base = np.zeros((4, 4), dtype=int)
    base[0:2, 0:2] = 1
    shifted = np.zeros((4, 4), dtype=int)
    shifted[0:2, 1:3] = 1
    a = BinaryMask.from_dense(base)
    b = BinaryMask.from_dense(shifted)
    # overlap 2 cells, union 6 cells
    assert dense_iou(a, b) == pytest.approx(2 / 6)
    assert dense_iou(a, a) == 1.0
    empty = BinaryMask.from_dense(np.zeros((4, 4), dtype=int))
    assert dense_iou(empty, empty) == 1.0
    assert dense_iou(a, empty) == 0.0


def test_reference_loss_hand_value():
    # One sample, label 1, all four metrics at their thresholds: each
    # probability is exactly 0.5, so the loss is 4 * ln 2.
    values = np.zeros((1, 4))
    taus = np.zeros(4)
    loss = reference_loss(values, [1.0], taus, lam=10.0)
    assert loss == pytest.approx(4 * np.log(2), rel=1e-12)


def test_fd_gradient_on_a_known_slope():
    # Single metric active: d/dtau of BCE for a positive sample is
    # lam * (P - y) evaluated per metric; at s = tau it is lam * (-0.5).
    values = np.zeros((1, 4))
    taus = np.zeros(4)
    grads = fd_gradient(values, [1.0], taus, lam=10.0)
    assert np.allclose(grads, [5.0, 5.0, 5.0, 5.0], rtol=1e-6)


def test_depth_by_doubling_table():
    table = {1: 1, 2: 2, 3: 2, 4: 3, 7: 3, 8: 4, 15: 4, 16: 5, 1023: 10, 1024: 11}
    for k, expected in table.items():
        assert depth_by_doubling(k) == expected, k


def test_brute_drift_flags_the_right_dimensions():
    ok, violations = brute_drift([0.0, 0.5], [0.0, 0.1], [1.0], [1.0], eps_fg=0.3, eps_bg=0.1)
    assert not ok
    assert violations == [("fg", 1)]
    ok, violations = brute_drift([0.0], [0.3], [0.0], [0.0], eps_fg=0.3, eps_bg=0.1)
    assert ok and violations == []
