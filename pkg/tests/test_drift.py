"""Per-dimension drift bounds: direct check, calibration, SMT emission."""

import os
import stat

import numpy as np
import pytest

from objectalign import (
    DriftTolerances,
    calibrate_tolerances,
    check_drift,
    emit_smtlib,
    run_smtlib_solver,
)

from helpers import make_frame
from oracles import brute_drift


def _pair(fg_a, fg_b, bg_a=None, bg_b=None):
    bg_a = [0.0] * 4 if bg_a is None else bg_a
    bg_b = [0.0] * 4 if bg_b is None else bg_b
    a = make_frame(0, fg_embedding=np.asarray(fg_a, float), bg_embedding=np.asarray(bg_a, float))
    b = make_frame(1, fg_embedding=np.asarray(fg_b, float), bg_embedding=np.asarray(bg_b, float))
    return a, b


def test_agrees_with_brute_force_check():
    rng = np.random.default_rng(41)
    for _ in range(200):
        fg_dim = int(rng.integers(1, 12))
        bg_dim = int(rng.integers(1, 12))
        fg_a, fg_b = rng.normal(size=fg_dim), rng.normal(size=fg_dim)
        bg_a, bg_b = rng.normal(size=bg_dim), rng.normal(size=bg_dim)
        tol = DriftTolerances(eps_fg=float(rng.uniform(0.1, 2)), eps_bg=float(rng.uniform(0.1, 2)))
        verdict = check_drift(*_pair(fg_a, fg_b, bg_a, bg_b), tol)
        expect_ok, expect_where = brute_drift(fg_a, fg_b, bg_a, bg_b, tol.eps_fg, tol.eps_bg)
        assert verdict.satisfied == expect_ok
        assert [(v.region, v.dimension) for v in verdict.violations] == expect_where


def test_boundary_difference_exactly_at_tolerance_passes():
    tol = DriftTolerances(eps_fg=0.25, eps_bg=0.25)
    a, b = _pair([0.5, 0.5], [0.25, 0.75])  # both diffs exactly 0.25
    assert check_drift(a, b, tol).satisfied is True

    just_over = np.nextafter(0.25, 1.0)
    a, b = _pair([0.5, 0.5], [0.5 - just_over, 0.75])
    verdict = check_drift(a, b, tol)
    assert verdict.satisfied is False
    assert [(v.region, v.dimension) for v in verdict.violations] == [("fg", 0)]


def test_violations_ordered_foreground_first_then_dimension():
    tol = DriftTolerances(eps_fg=0.1, eps_bg=0.1)
    a, b = _pair(
        [1.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0],
        bg_a=[0.5, 0.0, 0.0, 0.0],
        bg_b=[0.0, 0.0, 0.0, 0.0],
    )
    verdict = check_drift(a, b, tol)
    assert [(v.region, v.dimension) for v in verdict.violations] == [
        ("fg", 0),
        ("fg", 2),
        ("bg", 0),
    ]
    first = verdict.violations[0]
    assert first.difference == pytest.approx(1.0)
    assert first.tolerance == 0.1


def test_embedding_length_mismatch_is_an_error():
    a = make_frame(0, fg_embedding=np.zeros(4))
    b = make_frame(1, fg_embedding=np.zeros(5))
    with pytest.raises(ValueError, match="fg embedding length mismatch"):
        check_drift(a, b, DriftTolerances(0.1, 0.1))


def test_tolerances_must_be_positive():
    with pytest.raises(ValueError):
        DriftTolerances(eps_fg=0.0, eps_bg=0.1)
    with pytest.raises(ValueError):
        DriftTolerances(eps_fg=0.1, eps_bg=-1.0)


class TestCalibration:
    def _pairs_with_maxima(self, fg_maxima, bg_maxima):
        pairs = []
        for fg_m, bg_m in zip(fg_maxima, bg_maxima):
            pairs.append(
                _pair([fg_m, 0.0], [0.0, 0.0], bg_a=[bg_m, 0.0], bg_b=[0.0, 0.0])
            )
        return pairs

    def test_order_statistic_hand_case(self):
        pairs = self._pairs_with_maxima([0.1, 0.2, 0.3, 0.4], [0.4, 0.3, 0.2, 0.1])
        tol = calibrate_tolerances(pairs, quantile=0.5)
        # ceil(0.5 * 4) - 1 = index 1 of the sorted maxima, widened by 5%
        assert tol.eps_fg == pytest.approx(0.2 * 1.05)
        assert tol.eps_bg == pytest.approx(0.2 * 1.05)

    def test_full_quantile_covers_every_pair(self):
        rng = np.random.default_rng(47)
        pairs = [
            _pair(rng.normal(size=6), rng.normal(size=6), rng.normal(size=6), rng.normal(size=6))
            for _ in range(30)
        ]
        tol = calibrate_tolerances(pairs, quantile=1.0)
        for a, b in pairs:
            assert check_drift(a, b, tol).satisfied

    def test_identical_pairs_fall_back_to_floor(self):
        frame = make_frame(0)
        tol = calibrate_tolerances([(frame, frame)] * 3)
        assert tol.eps_fg == 1e-6
        assert tol.eps_bg == 1e-6

    def test_input_validation(self):
        with pytest.raises(ValueError, match="at least one"):
            calibrate_tolerances([])
        pairs = self._pairs_with_maxima([0.1], [0.1])
        for bad in (0.0, -0.5, 1.5):
            with pytest.raises(ValueError, match="quantile"):
                calibrate_tolerances(pairs, quantile=bad)


class TestSmtEmission:
    def test_script_layout(self):
        a, b = _pair([0.5, 0.25], [0.25, 0.25], bg_a=[0.0] * 3, bg_b=[0.0] * 3)
        script = emit_smtlib(a, b, DriftTolerances(0.25, 0.25))
        lines = script.splitlines()
        assert lines[0] == "; per-dimension drift bounds for frames 0 -> 1"
        assert lines[1] == "(set-logic QF_LRA)"
        assert lines[2] == "(define-fun eps_fg () Real 0.25)"
        assert lines[-1] == "(check-sat)"
        assert script.endswith("(check-sat)\n")
        asserts = [l for l in lines if l.startswith("(assert")]
        assert len(asserts) == 2 + 3  # one per fg dim plus one per bg dim
        assert asserts[0].endswith("; fg dim 0")
        assert asserts[2].endswith("; bg dim 0")

    def test_literals_are_exact_binary_expansions(self):
        # 0.1 is not representable; the script must carry the exact value the
        # float comparison used, not a rounded re-print.
        a, b = _pair([0.1], [0.0])
        script = emit_smtlib(a, b, DriftTolerances(0.5, 0.5))
        expansion = "0.1000000000000000055511151231257827021181583404541015625"
        assert f"(<= {expansion} eps_fg)" in script

    def test_negative_differences_use_unary_minus(self):
        a, b = _pair([0.0], [0.25])
        script = emit_smtlib(a, b, DriftTolerances(0.5, 0.5))
        assert "(<= (- 0.25) eps_fg)" in script
        assert "(<= (- (- 0.25)) eps_fg)" in script

    def test_whole_numbers_keep_a_decimal_point(self):
        a, b = _pair([2.0], [0.0])
        script = emit_smtlib(a, b, DriftTolerances(1.0, 1.0))
        assert "(define-fun eps_fg () Real 1.0)" in script
        assert "(<= 2.0 eps_fg)" in script


class TestSolverDriver:
    def _fake_solver(self, tmp_path, body):
        path = tmp_path / "solver.sh"
        path.write_text(f"#!/bin/sh\n{body}\n")
        path.chmod(path.stat().st_mode | stat.S_IXUSR)
        return str(path)

    def test_reads_sat_verdict(self, tmp_path):
        assert run_smtlib_solver("(check-sat)", self._fake_solver(tmp_path, "echo sat")) == "sat"

    def test_reads_unsat_verdict(self, tmp_path):
        cmd = self._fake_solver(tmp_path, "echo unsat")
        assert run_smtlib_solver("(check-sat)", cmd) == "unsat"

    def test_garbage_output_is_an_error(self, tmp_path):
        cmd = self._fake_solver(tmp_path, "echo broken")
        with pytest.raises(RuntimeError, match="no sat/unsat verdict"):
            run_smtlib_solver("(check-sat)", cmd)

    def test_missing_binary_is_an_error(self):
        with pytest.raises(RuntimeError, match="solver binary not found"):
            run_smtlib_solver("(check-sat)", "no-such-solver-anywhere")

    def test_empty_command_is_an_error(self):
        with pytest.raises(ValueError, match="empty solver command"):
            run_smtlib_solver("(check-sat)", [])


@pytest.mark.skipif(
    not os.environ.get("OBJECTALIGN_SMT_SOLVER"),
    reason="set OBJECTALIGN_SMT_SOLVER to an SMT-LIB solver command to enable",
)
def test_solver_agrees_with_direct_check():
    command = os.environ["OBJECTALIGN_SMT_SOLVER"]
    rng = np.random.default_rng(53)
    for _ in range(25):
        dim = int(rng.integers(1, 8))
        a, b = _pair(
            rng.normal(size=dim), rng.normal(size=dim), rng.normal(size=dim), rng.normal(size=dim)
        )
        tol = DriftTolerances(float(rng.uniform(0.2, 2)), float(rng.uniform(0.2, 2)))
        verdict = check_drift(a, b, tol)
        answer = run_smtlib_solver(emit_smtlib(a, b, tol), command)
        assert (answer == "sat") == verdict.satisfied


def test_two_epsilon_midpoint_property():
    # If some midpoint frame sits within eps of both endpoints per dimension,
    # the endpoints themselves satisfy the doubled bounds.
    rng = np.random.default_rng(59)
    for _ in range(100):
        dim = int(rng.integers(1, 10))
        eps = float(rng.uniform(0.05, 0.5))
        mid_fg, mid_bg = rng.normal(size=dim), rng.normal(size=dim)
        offsets = lambda: rng.uniform(-eps, eps, size=dim)
        a = make_frame(0, fg_embedding=mid_fg + offsets(), bg_embedding=mid_bg + offsets())
        b = make_frame(2, fg_embedding=mid_fg + offsets(), bg_embedding=mid_bg + offsets())
        tight = DriftTolerances(eps, eps)
        mid = make_frame(1, fg_embedding=mid_fg, bg_embedding=mid_bg)
        assert check_drift(a, mid, tight).satisfied
        assert check_drift(mid, b, tight).satisfied
        assert check_drift(a, b, DriftTolerances(2 * eps, 2 * eps)).satisfied
