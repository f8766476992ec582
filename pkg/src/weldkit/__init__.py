"""weldkit: torch-pose skill telemetry for welding training.

Turns 6-DOF controller streams into live technique feedback (contact
distance, travel/work angles, travel speed), screens logs for tracking
drift, and reproduces the crossover-study learning analytics.
"""

from .analytics import (
    Condition,
    LineData,
    LineDeviation,
    ParticipantMetrics,
    ParticipantSegmentRow,
    Pool,
    Segment,
    StudySequence,
    TTestResult,
    ZScoredLine,
    first_condition_slopes,
    group_switch_delta,
    learning_slope,
    line_mad,
    lines_from_sessions,
    load_crossover_segments,
    mad_values,
    parse_segment_rows,
    participant_summary,
    segment_for,
    segment_table,
    switch_delta,
    table_row,
    two_sample_t,
    zscore_lines,
)
from .bench import (
    run_audio_bench,
    run_bootstrap_bench,
    run_drift_bench,
    run_jig_bench,
    run_speed_checks,
)
from .config import LineScript, load_plan, load_ranges, load_script
from .errors import (
    ImplausibleTapError,
    SchemaError,
    SequenceError,
    StorageError,
    WeldkitError,
)
from .feedback import (
    FeedbackEvent,
    FeedbackTracker,
    Hint,
    LessonPlan,
    LessonState,
    LineSummary,
    Module,
    ModulePlan,
    ParamShare,
    RangeState,
    advance,
    classify,
    default_plan,
    feedback_stream,
    lesson_report,
    summarize_line,
)
from .integrity import (
    DriftReport,
    LineDriftReport,
    ScreeningVerdict,
    bootstrap_drift_probability,
    detect_drift,
    drift_pair_flag,
    mark_drift,
    screen_line,
)
from .pose import (
    CalibrationState,
    GridPlane,
    Parameter,
    PoseFrame,
    RigidOffset,
    TargetRanges,
    TorchPose,
    WeldLineSpec,
    derive_torch_pose,
    grid_to_world,
    tap_recalibrate,
    world_to_grid,
)
from .session import (
    LineRecord,
    ReplayStep,
    Session,
    SessionEngine,
    SessionHeader,
    attach_audio_levels,
    decode_session,
    encode_session,
    load,
    load_audio_levels,
    persist,
    replay,
    rerun,
)
from .skills import SkillExtractor, SkillSample, extract_samples, flag_drift
from .synth import (
    AudioBurst,
    DriftEvent,
    TrajectorySpec,
    gen_pass,
    inject_drift,
    inject_noise,
    synth_audio_levels,
)
from .trigger import (
    AudioConfig,
    TriggerEvent,
    align_audio_log,
    detect_mechanical,
    detect_onset_acoustic,
)

__version__ = "0.1.0"

__all__ = [
    "AudioBurst",
    "AudioConfig",
    "CalibrationState",
    "Condition",
    "DriftEvent",
    "DriftReport",
    "FeedbackEvent",
    "FeedbackTracker",
    "GridPlane",
    "Hint",
    "ImplausibleTapError",
    "LessonPlan",
    "LessonState",
    "LineData",
    "LineDeviation",
    "LineDriftReport",
    "LineRecord",
    "LineScript",
    "LineSummary",
    "Module",
    "ModulePlan",
    "ParamShare",
    "Parameter",
    "ParticipantMetrics",
    "ParticipantSegmentRow",
    "Pool",
    "PoseFrame",
    "RangeState",
    "ReplayStep",
    "RigidOffset",
    "SchemaError",
    "ScreeningVerdict",
    "Segment",
    "SequenceError",
    "Session",
    "SessionEngine",
    "SessionHeader",
    "SkillExtractor",
    "SkillSample",
    "StorageError",
    "StudySequence",
    "TTestResult",
    "TargetRanges",
    "TorchPose",
    "TrajectorySpec",
    "TriggerEvent",
    "WeldLineSpec",
    "WeldkitError",
    "ZScoredLine",
    "__version__",
    "advance",
    "align_audio_log",
    "attach_audio_levels",
    "bootstrap_drift_probability",
    "classify",
    "decode_session",
    "default_plan",
    "derive_torch_pose",
    "detect_drift",
    "detect_mechanical",
    "detect_onset_acoustic",
    "drift_pair_flag",
    "encode_session",
    "extract_samples",
    "feedback_stream",
    "first_condition_slopes",
    "flag_drift",
    "gen_pass",
    "grid_to_world",
    "group_switch_delta",
    "inject_drift",
    "inject_noise",
    "learning_slope",
    "lesson_report",
    "line_mad",
    "lines_from_sessions",
    "load",
    "load_audio_levels",
    "load_crossover_segments",
    "load_plan",
    "load_ranges",
    "load_script",
    "mad_values",
    "mark_drift",
    "parse_segment_rows",
    "participant_summary",
    "persist",
    "replay",
    "rerun",
    "run_audio_bench",
    "run_bootstrap_bench",
    "run_drift_bench",
    "run_jig_bench",
    "run_speed_checks",
    "screen_line",
    "segment_for",
    "segment_table",
    "summarize_line",
    "switch_delta",
    "synth_audio_levels",
    "table_row",
    "tap_recalibrate",
    "two_sample_t",
    "world_to_grid",
    "zscore_lines",
]
