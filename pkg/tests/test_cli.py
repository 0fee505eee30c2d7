"""End-to-end command-line pipeline: bench -> learn -> verify -> repair -> run."""

import json

import numpy as np
import pytest

from objectalign import ThresholdVector, VerificationReport, load_video, save_video
from objectalign.cli import main

from helpers import make_frame, square_mask, unit


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Benchmark pair plus learned thresholds, shared across the module."""
    ws = tmp_path_factory.mktemp("cli")

    events = ws / "events.json"
    events.write_text(
        json.dumps([{"type": "embedding_drift", "start": 10, "length": 3, "severity": 0.5}])
    )
    assert main(["bench", "--frames", "30", "--events", str(events),
                 "--seed", "77", "--out", str(ws / "bench")]) == 0

    # negatives: alternate between two frames that disagree on every metric
    a = dict(
        clip_embedding=unit([1.0, 0.0, 0.0, 0.0]),
        histogram=np.array([1.0, 0.0, 0.0, 0.0]),
        mask=square_mask(top=0, left=0, size=4),
        lpips_features=np.zeros(5),
    )
    b = dict(
        clip_embedding=unit([0.3, 1.0, 0.0, 0.0]),
        histogram=np.array([0.0, 1.0, 0.0, 0.0]),
        mask=square_mask(top=4, left=4, size=4),
        lpips_features=np.array([0.45, 0.0, 0.0, 0.0, 0.0]),
    )
    churn = [make_frame(i, **(a if i % 2 == 0 else b)) for i in range(12)]
    save_video(churn, ws / "negatives.jsonl")

    assert main(["learn", "--positives", str(ws / "bench" / "clean.jsonl"),
                 "--negatives", str(ws / "negatives.jsonl"),
                 "--out", str(ws / "thresholds.json")]) == 0
    return ws


def _verify_args(workspace, video, report):
    return ["verify", "--video", str(video),
            "--thresholds", str(workspace / "thresholds.json"),
            "--calibrate", str(workspace / "bench" / "clean.jsonl"),
            "--quantile", "1.0", "--report", str(report)]


class TestBench:
    def test_outputs(self, workspace):
        bench = workspace / "bench"
        clean = load_video(bench / "clean.jsonl")
        corrupted = load_video(bench / "corrupted.jsonl")
        assert len(clean) == len(corrupted) == 30
        truth = json.loads((bench / "ground_truth.json").read_text())
        assert truth["events"] == [
            {"type": "embedding_drift", "start": 10, "length": 3, "severity": 0.5}
        ]
        assert truth["affected"]["smt"] == [9, 10, 11, 12]

    def test_rejects_non_array_events(self, workspace, tmp_path, capsys):
        bad = tmp_path / "events.json"
        bad.write_text("{}")
        assert main(["bench", "--frames", "10", "--events", str(bad),
                     "--seed", "1", "--out", str(tmp_path / "b")]) == 1
        assert "must hold a JSON array" in capsys.readouterr().err


class TestLearn:
    def test_fits_and_reports(self, workspace, tmp_path, capsys):
        out = tmp_path / "thresholds.json"
        assert main(["learn", "--positives", str(workspace / "bench" / "clean.jsonl"),
                     "--negatives", str(workspace / "negatives.jsonl"),
                     "--out", str(out)]) == 0
        assert capsys.readouterr().out.startswith("fit 29+11 transitions")
        tau = ThresholdVector.load(out)
        assert 0.35 < tau.tau_cos < 0.999
        assert tau.lam == 10.0

    def test_missing_file_exits_one(self, tmp_path, capsys):
        assert main(["learn", "--positives", str(tmp_path / "nope.jsonl"),
                     "--negatives", str(tmp_path / "nope.jsonl"),
                     "--out", str(tmp_path / "t.json")]) == 1
        assert "error:" in capsys.readouterr().err


class TestVerify:
    def test_flags_exactly_the_injected_transitions(self, workspace, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        rc = main(_verify_args(workspace, workspace / "bench" / "corrupted.jsonl", report_path))
        assert rc == 0
        assert "4/29 transitions inconsistent" in capsys.readouterr().out
        report = VerificationReport.load(report_path)
        assert report.inconsistent == (9, 10, 11, 12)

    def test_tolerance_flag_conflicts(self, workspace, tmp_path, capsys):
        video = str(workspace / "bench" / "corrupted.jsonl")
        thresholds = str(workspace / "thresholds.json")
        base = ["verify", "--video", video, "--thresholds", thresholds,
                "--report", str(tmp_path / "r.json")]
        assert main(base) == 1
        assert "drift tolerances required" in capsys.readouterr().err
        assert main(base + ["--eps-s", "0.1"]) == 1
        assert "must be given together" in capsys.readouterr().err
        assert main(base + ["--eps-s", "0.1", "--eps-bg", "0.1",
                            "--calibrate", video]) == 1
        assert "not both" in capsys.readouterr().err


class TestRepair:
    def test_restores_the_flagged_run(self, workspace, tmp_path, capsys):
        corrupted = workspace / "bench" / "corrupted.jsonl"
        report_path = tmp_path / "report.json"
        assert main(_verify_args(workspace, corrupted, report_path)) == 0
        capsys.readouterr()

        out = tmp_path / "repaired.jsonl"
        assert main(["repair", "--video", str(corrupted), "--report", str(report_path),
                     "--out", str(out)]) == 0
        assert "replaced 4 frames across 1 runs" in capsys.readouterr().out

        recheck = tmp_path / "recheck.json"
        assert main(_verify_args(workspace, out, recheck)) == 0
        assert VerificationReport.load(recheck).inconsistent == ()

    def test_unknown_interpolator(self, workspace, tmp_path, capsys):
        assert main(["repair", "--video", str(workspace / "bench" / "corrupted.jsonl"),
                     "--report", str(tmp_path / "missing.json"),
                     "--interpolator", "bogus",
                     "--out", str(tmp_path / "o.jsonl")]) == 1
        assert "error:" in capsys.readouterr().err


class TestRun:
    def test_converges_and_writes_the_report_trail(self, workspace, tmp_path, capsys):
        out = tmp_path / "fixed.jsonl"
        reports = tmp_path / "reports"
        rc = main(["run", "--video", str(workspace / "bench" / "corrupted.jsonl"),
                   "--thresholds", str(workspace / "thresholds.json"),
                   "--calibrate", str(workspace / "bench" / "clean.jsonl"),
                   "--quantile", "1.0",
                   "--out", str(out), "--report-dir", str(reports)])
        assert rc == 0
        assert capsys.readouterr().out.startswith("converged after 1 repair rounds")
        assert sorted(p.name for p in reports.iterdir()) == ["report_000.json", "report_001.json"]
        assert VerificationReport.load(reports / "report_001.json").inconsistent == ()
        assert len(load_video(out)) == 30

    def test_unrepairable_proposition_gap_exits_two(self, workspace, tmp_path, capsys):
        events = tmp_path / "events.json"
        events.write_text(
            json.dumps([{"type": "prop_flip", "start": 3, "length": 2, "severity": 0.9}])
        )
        assert main(["bench", "--frames", "8", "--events", str(events),
                     "--seed", "5", "--out", str(tmp_path / "b")]) == 0
        spec = tmp_path / "spec.ltl"
        spec.write_text("G subject_present\n")
        capsys.readouterr()
        rc = main(["run", "--video", str(tmp_path / "b" / "corrupted.jsonl"),
                   "--thresholds", str(workspace / "thresholds.json"),
                   "--calibrate", str(tmp_path / "b" / "clean.jsonl"),
                   "--quantile", "1.0",
                   "--spec", str(spec), "--sat-threshold", "0.5",
                   "--max-iterations", "2",
                   "--out", str(tmp_path / "o.jsonl"),
                   "--report-dir", str(tmp_path / "reports")])
        assert rc == 2
        assert capsys.readouterr().out.startswith("max_iterations after 2 repair rounds")

    def test_fully_corrupted_video_exits_three(self, workspace, tmp_path, capsys):
        events = tmp_path / "events.json"
        events.write_text(
            json.dumps([{"type": "embedding_drift", "start": 0, "length": 6, "severity": 0.5}])
        )
        assert main(["bench", "--frames", "6", "--events", str(events),
                     "--seed", "9", "--out", str(tmp_path / "b")]) == 0
        capsys.readouterr()
        rc = main(["run", "--video", str(tmp_path / "b" / "corrupted.jsonl"),
                   "--thresholds", str(workspace / "thresholds.json"),
                   "--calibrate", str(tmp_path / "b" / "clean.jsonl"),
                   "--quantile", "1.0",
                   "--out", str(tmp_path / "o.jsonl"),
                   "--report-dir", str(tmp_path / "reports")])
        assert rc == 3
        assert capsys.readouterr().out.startswith("no_anchors after 0 repair rounds")


class TestCheckSpec:
    def test_clean_trace_scores_one(self, workspace, tmp_path, capsys):
        spec = tmp_path / "spec.ltl"
        spec.write_text("G subject_present")
        rc = main(["check-spec", "--spec", str(spec),
                   "--video", str(workspace / "bench" / "clean.jsonl")])
        assert rc == 0
        assert capsys.readouterr().out.strip() == "1.0"

    def test_violating_trace_scores_zero(self, workspace, tmp_path, capsys):
        events = tmp_path / "events.json"
        events.write_text(
            json.dumps([{"type": "prop_flip", "start": 4, "length": 1, "severity": 0.9}])
        )
        assert main(["bench", "--frames", "8", "--events", str(events),
                     "--seed", "3", "--out", str(tmp_path / "b")]) == 0
        spec = tmp_path / "spec.ltl"
        spec.write_text("G subject_present")
        capsys.readouterr()
        rc = main(["check-spec", "--spec", str(spec),
                   "--video", str(tmp_path / "b" / "corrupted.jsonl")])
        assert rc == 0
        assert capsys.readouterr().out.strip() == "0.0"

    def test_unknown_proposition(self, workspace, tmp_path, capsys):
        spec = tmp_path / "spec.ltl"
        spec.write_text("G zzz")
        assert main(["check-spec", "--spec", str(spec),
                     "--video", str(workspace / "bench" / "clean.jsonl")]) == 1
        assert "does not carry propositions ['zzz']" in capsys.readouterr().err

    def test_empty_spec_file(self, workspace, tmp_path, capsys):
        spec = tmp_path / "spec.ltl"
        spec.write_text("   \n")
        assert main(["check-spec", "--spec", str(spec),
                     "--video", str(workspace / "bench" / "clean.jsonl")]) == 1
        assert "is empty" in capsys.readouterr().err


class TestUsage:
    def test_no_arguments(self, capsys):
        assert main([]) == 1
        capsys.readouterr()

    def test_unknown_command(self, capsys):
        assert main(["polish"]) == 1
        capsys.readouterr()

    def test_missing_required_flag(self, capsys):
        assert main(["learn", "--positives", "x.jsonl"]) == 1
        assert "error:" in capsys.readouterr().err
