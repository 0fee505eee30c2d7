"""Verification and repair for edited video feature streams.

The package checks every adjacent frame pair of a feature stream against
learned metric thresholds, per-dimension semantic drift bounds, and a
temporal-logic spec, then repairs flagged runs by interpolating across the
nearest trusted frames until the stream verifies clean.
"""

from .drift import (
    DriftTolerances,
    DriftVerdict,
    DriftViolation,
    calibrate_tolerances,
    check_drift,
    emit_smtlib,
    run_smtlib_solver,
)
from .engine import (
    CHECK_NAMES,
    ConsistencyVerdict,
    InconsistentRun,
    VerificationReport,
    contiguous_runs,
    evaluate_video,
)
from .features import (
    BinaryMask,
    FrameRecord,
    SchemaError,
    TransitionFeatures,
    load_video,
    save_video,
)
from .harness import (
    DetectionScore,
    EventType,
    GroundTruth,
    InjectionEvent,
    inject_inconsistencies,
    make_clean_video,
    make_training_set,
    score_detection,
    transitions_from_video,
)
from .loop import LoopResult, LoopStatus, PipelineConfig, run_loop
from .metrics import (
    cosine_similarity,
    histogram_correlation,
    lpips_distance,
    mask_iou,
    transition_features,
)
from .repair import (
    BuiltinInterpolator,
    ExternalInterpolator,
    Interpolator,
    InterpolatorError,
    NoAnchorsError,
    RepairAction,
    Strategy,
    builtin_interpolate,
    execute_repairs,
    interpolation_depth,
    plan_repairs,
)
from .temporal import (
    Always,
    And,
    Atom,
    Eventually,
    Formula,
    Implies,
    MonitorDfa,
    Next,
    Not,
    Or,
    ParseError,
    SatisfactionResult,
    Until,
    VideoAutomaton,
    atoms,
    build_automaton,
    parse_spec,
    satisfaction_probability,
    spec_to_monitor,
    to_text,
)
from .thresholds import (
    METRIC_NAMES,
    FitConfig,
    FitDiagnostics,
    FitDivergedError,
    ThresholdVector,
    TrainingSet,
    classify,
    fit_thresholds,
    per_metric_probability,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # features
    "SchemaError",
    "BinaryMask",
    "FrameRecord",
    "TransitionFeatures",
    "load_video",
    "save_video",
    # metrics
    "cosine_similarity",
    "histogram_correlation",
    "mask_iou",
    "lpips_distance",
    "transition_features",
    # thresholds
    "METRIC_NAMES",
    "ThresholdVector",
    "TrainingSet",
    "FitConfig",
    "FitDiagnostics",
    "FitDivergedError",
    "fit_thresholds",
    "per_metric_probability",
    "classify",
    # drift
    "DriftTolerances",
    "DriftViolation",
    "DriftVerdict",
    "check_drift",
    "calibrate_tolerances",
    "emit_smtlib",
    "run_smtlib_solver",
    # temporal
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
    "atoms",
    "to_text",
    "parse_spec",
    "ParseError",
    "spec_to_monitor",
    "MonitorDfa",
    "VideoAutomaton",
    "build_automaton",
    "satisfaction_probability",
    "SatisfactionResult",
    # engine
    "CHECK_NAMES",
    "ConsistencyVerdict",
    "InconsistentRun",
    "VerificationReport",
    "contiguous_runs",
    "evaluate_video",
    # repair
    "Strategy",
    "RepairAction",
    "NoAnchorsError",
    "InterpolatorError",
    "interpolation_depth",
    "plan_repairs",
    "builtin_interpolate",
    "Interpolator",
    "BuiltinInterpolator",
    "ExternalInterpolator",
    "execute_repairs",
    # loop
    "LoopStatus",
    "PipelineConfig",
    "LoopResult",
    "run_loop",
    # harness
    "EventType",
    "InjectionEvent",
    "GroundTruth",
    "DetectionScore",
    "make_clean_video",
    "make_training_set",
    "transitions_from_video",
    "inject_inconsistencies",
    "score_detection",
]
