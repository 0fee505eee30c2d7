"""Command-line interface.

Subcommands cover the whole pipeline: learn thresholds from labeled feature
streams, verify a video, repair from a saved report, run the closed loop,
score a temporal spec, and generate benchmark data. Exit codes: 0 for
success (including a loop that converged), 2 when the repair budget ran out,
3 when no anchor frames remained, 1 for any error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .drift import DriftTolerances, calibrate_tolerances
from .engine import VerificationReport, evaluate_video
from .features import SchemaError, load_video, save_video
from .harness import (
    InjectionEvent,
    adjacent_negatives,
    adjacent_pairs,
    inject_inconsistencies,
    make_clean_video,
    transitions_from_video,
)
from .loop import LoopStatus, PipelineConfig, run_loop
from .repair import (
    BuiltinInterpolator,
    ExternalInterpolator,
    Interpolator,
    InterpolatorError,
    NoAnchorsError,
    execute_repairs,
    plan_repairs,
)
from .temporal import ParseError, build_automaton, parse_spec, satisfaction_probability, spec_to_monitor, atoms
from .thresholds import FitConfig, ThresholdVector, TrainingSet, fit_thresholds

__all__ = ["main", "entrypoint"]

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_MAX_ITERATIONS = 2
EXIT_NO_ANCHORS = 3

_STATUS_EXIT = {
    LoopStatus.CONVERGED: EXIT_OK,
    LoopStatus.MAX_ITERATIONS: EXIT_MAX_ITERATIONS,
    LoopStatus.NO_ANCHORS: EXIT_NO_ANCHORS,
}


class _Parser(argparse.ArgumentParser):
    """ArgumentParser that exits 1 on usage errors, keeping 2 and 3 for loop outcomes."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_ERROR)


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="objectalign", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    learn = sub.add_parser("learn", help="fit per-metric thresholds from labeled streams")
    learn.add_argument("--positives", required=True, help="feature JSONL whose adjacent pairs are consistent")
    learn.add_argument("--negatives", required=True, help="feature JSONL whose adjacent pairs are inconsistent")
    learn.add_argument("--out", required=True, help="output thresholds JSON path")
    learn.add_argument("--lambda", dest="lam", type=float, default=10.0, help="sigmoid sharpness (default 10)")
    learn.add_argument("--lr", type=float, default=0.01, help="Adam learning rate (default 0.01)")
    learn.add_argument("--epochs", type=int, default=500, help="maximum optimizer epochs (default 500)")

    verify = sub.add_parser("verify", help="verify a video and write the transition report")
    _add_verify_options(verify)
    verify.add_argument("--report", required=True, help="output report JSON path")

    repair = sub.add_parser("repair", help="repair flagged runs from a saved report")
    repair.add_argument("--video", required=True)
    repair.add_argument("--report", required=True, help="report JSON from a previous verify")
    repair.add_argument("--interpolator", default="builtin", help='"builtin" or exec:"CMD"')
    repair.add_argument("--out", required=True, help="output repaired feature JSONL")

    run = sub.add_parser("run", help="closed verify-repair loop until consistent")
    _add_verify_options(run)
    run.add_argument("--interpolator", default="builtin", help='"builtin" or exec:"CMD"')
    run.add_argument("--max-iterations", type=int, default=10)
    run.add_argument("--out", required=True, help="output corrected feature JSONL")
    run.add_argument("--report-dir", required=True, help="directory for per-iteration reports")

    check = sub.add_parser("check-spec", help="evaluate a temporal spec over a video trace")
    check.add_argument("--spec", required=True, help="file containing the temporal formula")
    check.add_argument("--video", required=True)
    check.add_argument("--prop-threshold", type=float, default=0.5)

    bench = sub.add_parser("bench", help="generate a clean/corrupted benchmark pair")
    bench.add_argument("--frames", type=int, required=True)
    bench.add_argument("--events", required=True, help="JSON file: array of injection events")
    bench.add_argument("--seed", type=int, required=True)
    bench.add_argument("--out", required=True, help="output directory")

    return parser


def _add_verify_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--video", required=True, help="feature JSONL to verify")
    p.add_argument("--thresholds", required=True, help="thresholds JSON from `learn`")
    p.add_argument("--eps-s", type=float, default=None, help="foreground drift tolerance")
    p.add_argument("--eps-bg", type=float, default=None, help="background drift tolerance")
    p.add_argument("--calibrate", default=None, help="clean feature JSONL to calibrate tolerances from")
    p.add_argument("--quantile", type=float, default=0.99, help="calibration quantile (default 0.99)")
    p.add_argument("--spec", default=None, help="file containing a temporal formula")
    p.add_argument("--sat-threshold", type=float, default=0.9)
    p.add_argument("--prop-threshold", type=float, default=0.5)


def _resolve_tolerances(args) -> DriftTolerances:
    explicit = args.eps_s is not None or args.eps_bg is not None
    if explicit and args.calibrate:
        raise ValueError("give either --eps-s/--eps-bg or --calibrate, not both")
    if explicit:
        if args.eps_s is None or args.eps_bg is None:
            raise ValueError("--eps-s and --eps-bg must be given together")
        return DriftTolerances(eps_fg=args.eps_s, eps_bg=args.eps_bg)
    if args.calibrate:
        reference = load_video(args.calibrate)
        return calibrate_tolerances(adjacent_pairs(reference), quantile=args.quantile)
    raise ValueError("drift tolerances required: --eps-s/--eps-bg or --calibrate")


def _resolve_spec(args):
    if args.spec is None:
        return None
    text = Path(args.spec).read_text(encoding="utf-8").strip()
    if not text:
        raise ValueError(f"spec file {args.spec!r} is empty")
    return parse_spec(text)


def _resolve_interpolator(selector: str) -> Interpolator:
    if selector == "builtin":
        return BuiltinInterpolator()
    if selector.startswith("exec:"):
        command = selector[len("exec:") :]
        if not command.strip():
            raise ValueError("exec: interpolator needs a command")
        return ExternalInterpolator(command)
    raise ValueError(f'unknown interpolator {selector!r}; expected "builtin" or exec:"CMD"')


def _cmd_learn(args) -> int:
    positives_video = load_video(args.positives)
    negatives_video = load_video(args.negatives)
    training = TrainingSet(
        positives=tuple(transitions_from_video(positives_video)),
        negatives=tuple(
            adjacent_negatives(negatives_video, range(len(negatives_video) - 1))
        ),
    )
    config = FitConfig(learning_rate=args.lr, max_epochs=args.epochs, lam=args.lam)
    thresholds, diagnostics = fit_thresholds(training, config)
    thresholds.save(args.out)
    print(
        f"fit {len(training.positives)}+{len(training.negatives)} transitions in "
        f"{diagnostics.epochs} epochs, loss {diagnostics.initial_loss:.6f} -> {diagnostics.final_loss:.6f}"
    )
    return EXIT_OK


def _cmd_verify(args) -> int:
    video = load_video(args.video)
    thresholds = ThresholdVector.load(args.thresholds)
    tolerances = _resolve_tolerances(args)
    spec = _resolve_spec(args)
    report = evaluate_video(
        video,
        thresholds,
        tolerances,
        spec=spec,
        sat_threshold=args.sat_threshold,
        prop_threshold=args.prop_threshold,
    )
    report.save(args.report)
    flagged = len(report.inconsistent)
    print(f"{flagged}/{report.transition_count} transitions inconsistent; report -> {args.report}")
    return EXIT_OK


def _cmd_repair(args) -> int:
    video = load_video(args.video)
    report = VerificationReport.load(args.report)
    interpolator = _resolve_interpolator(args.interpolator)
    try:
        actions, _ = plan_repairs(report, len(video))
    except NoAnchorsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ANCHORS
    repaired = execute_repairs(video, actions, interpolator)
    save_video(repaired, args.out)
    replaced = sum(action.run.k for action in actions)
    print(f"replaced {replaced} frames across {len(actions)} runs; output -> {args.out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    video = load_video(args.video)
    config = PipelineConfig(
        thresholds=ThresholdVector.load(args.thresholds),
        tolerances=_resolve_tolerances(args),
        spec=_resolve_spec(args),
        sat_threshold=args.sat_threshold,
        prop_threshold=args.prop_threshold,
        max_iterations=args.max_iterations,
        interpolator=_resolve_interpolator(args.interpolator),
    )
    result = run_loop(video, config)
    report_dir = Path(args.report_dir)
    report_dir.mkdir(parents=True, exist_ok=True)
    for i, report in enumerate(result.reports):
        report.save(report_dir / f"report_{i:03d}.json")
    save_video(result.video, args.out)
    print(
        f"{result.status.value} after {result.iterations_used} repair rounds; "
        f"{len(result.final_report.inconsistent)} transitions still flagged"
    )
    return _STATUS_EXIT[result.status]


def _cmd_check_spec(args) -> int:
    spec = _resolve_spec(args)
    video = load_video(args.video)
    missing = sorted(atoms(spec) - set(video[0].prop_confidences))
    if missing:
        raise ValueError(f"video does not carry propositions {missing}")
    automaton = build_automaton(video, prop_threshold=args.prop_threshold)
    monitor = spec_to_monitor(spec, alphabet=tuple(sorted(atoms(spec))))
    psi, _ = satisfaction_probability(automaton, monitor)
    print(psi)
    return EXIT_OK


def _cmd_bench(args) -> int:
    with open(args.events, encoding="utf-8") as fh:
        raw = json.load(fh)
    if not isinstance(raw, list):
        raise ValueError("events file must hold a JSON array of event objects")
    events = [InjectionEvent.from_json_dict(entry) for entry in raw]
    clean = make_clean_video(args.frames, args.seed)
    corrupted, truth = inject_inconsistencies(clean, events, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    save_video(clean, out / "clean.jsonl")
    save_video(corrupted, out / "corrupted.jsonl")
    payload = {
        "events": [event.to_json_dict() for event in events],
        "affected": {name: sorted(truth.transitions_for(name)) for name in truth.affected},
    }
    with open(out / "ground_truth.json", "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    print(f"wrote clean.jsonl, corrupted.jsonl, ground_truth.json -> {out}")
    return EXIT_OK


_COMMANDS = {
    "learn": _cmd_learn,
    "verify": _cmd_verify,
    "repair": _cmd_repair,
    "run": _cmd_run,
    "check-spec": _cmd_check_spec,
    "bench": _cmd_bench,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except NoAnchorsError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_ANCHORS
    except (SchemaError, ParseError, InterpolatorError, ValueError, OSError, RuntimeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def entrypoint() -> None:
    sys.exit(main())
