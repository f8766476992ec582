"""Range classification, debounced feedback events, line summaries, lessons.

Classification semantics: boundaries are inclusive, so a value equal to
either bound is Within. Feedback state changes are debounced over 5
consecutive countable frames (~56 ms at 90 Hz) to avoid flicker; invalid,
drift-flagged, or value-absent frames freeze the automaton (they neither
advance nor reset a pending change). The first countable frame of a line
opens its event immediately, so an all-Within line yields one Ok event
spanning the whole line. A confirmed change closes the previous event and
opens the next one at the confirming frame's timestamp.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import PlanExhaustedError
from .pose import CalibrationState, Parameter, TargetRanges, WeldLineSpec, world_to_grid
from .skills import SkillSample
from .units import MM_PER_M

DEBOUNCE_FRAMES = 5

ALL_PARAMETERS = (Parameter.CTWD, Parameter.TRAVEL_ANGLE, Parameter.WORK_ANGLE, Parameter.SPEED)


class RangeState(Enum):
    WITHIN = "within"
    BELOW = "below"
    ABOVE = "above"


class Hint(Enum):
    TOO_FAR = "too_far"
    TOO_CLOSE = "too_close"
    TOO_FAST = "too_fast"
    TOO_SLOW = "too_slow"
    TILT_LEFT = "tilt_left"
    TILT_RIGHT = "tilt_right"
    TILT_FORWARD = "tilt_forward"
    TILT_BACKWARD = "tilt_backward"
    OK = "ok"


class Module(Enum):
    CTWD = "ctwd"
    TRAVEL_ANGLE = "travel_angle"
    WORK_ANGLE = "work_angle"
    SPEED = "speed"
    COMBINATION = "combination"
    TEST = "test"


def classify(value: float, bounds: tuple[float, float]) -> RangeState:
    """Within iff lo <= value <= hi (inclusive); Below iff value < lo; else Above."""
    lo, hi = bounds
    if not lo < hi:
        raise ValueError("bounds must satisfy lo < hi")
    if value < lo:
        return RangeState.BELOW
    if value <= hi:
        return RangeState.WITHIN
    return RangeState.ABOVE


def hint_for(parameter: Parameter, state: RangeState, work_tilt: float = 0.0) -> Hint:
    """Correction hint for a parameter/state pair.

    Directional conventions (the travel direction runs to the user's right):
    excessive push reads TiltLeft (tilt back to the left), excessive drag
    TiltRight. A work-angle fault picks the arrow opposing the lateral lean,
    which needs the signed tilt.
    """
    if state is RangeState.WITHIN:
        return Hint.OK
    if parameter is Parameter.CTWD:
        return Hint.TOO_FAR if state is RangeState.ABOVE else Hint.TOO_CLOSE
    if parameter is Parameter.SPEED:
        return Hint.TOO_FAST if state is RangeState.ABOVE else Hint.TOO_SLOW
    if parameter is Parameter.TRAVEL_ANGLE:
        return Hint.TILT_LEFT if state is RangeState.ABOVE else Hint.TILT_RIGHT
    # Work angle can only be Below (clamped at 90).
    return Hint.TILT_BACKWARD if work_tilt > 0 else Hint.TILT_FORWARD


@dataclass(frozen=True)
class FeedbackEvent:
    parameter: Parameter
    state: RangeState
    hint: Hint
    onset: float
    offset: float | None = None


def _sample_value(sample: SkillSample, parameter: Parameter) -> float | None:
    """Classification input for one parameter; None when not countable."""
    if not sample.valid or sample.drift_flag:
        return None
    if parameter is Parameter.CTWD:
        return sample.ctwd
    if parameter is Parameter.TRAVEL_ANGLE:
        return sample.travel_angle
    if parameter is Parameter.WORK_ANGLE:
        return sample.work_angle
    return sample.speed_signed  # None during speed warm-up


class _ParamAutomaton:
    def __init__(self, parameter: Parameter, bounds: tuple[float, float], debounce: int):
        self.parameter = parameter
        self.bounds = bounds
        self.debounce = max(1, debounce)
        self.current: RangeState | None = None
        self.pending: RangeState | None = None
        self.pending_count = 0
        self.events: list[FeedbackEvent] = []

    def _open(self, state: RangeState, ts: float, tilt: float) -> FeedbackEvent:
        ev = FeedbackEvent(
            parameter=self.parameter,
            state=state,
            hint=hint_for(self.parameter, state, tilt),
            onset=ts,
        )
        self.events.append(ev)
        self.current = state
        self.pending = None
        self.pending_count = 0
        return ev

    def step(self, sample: SkillSample) -> FeedbackEvent | None:
        value = _sample_value(sample, self.parameter)
        if value is None:
            return None  # frozen
        state = classify(value, self.bounds)
        tilt = sample.work_tilt if not math.isnan(sample.work_tilt) else 0.0
        if self.current is None:
            return self._open(state, sample.timestamp, tilt)
        if state is self.current:
            self.pending = None
            self.pending_count = 0
            return None
        if state is self.pending:
            self.pending_count += 1
        else:
            self.pending = state
            self.pending_count = 1
        if self.pending_count >= self.debounce:
            self.events[-1] = replace(self.events[-1], offset=sample.timestamp)
            return self._open(state, sample.timestamp, tilt)
        return None

    def finalize(self, ts: float) -> None:
        if self.events and self.events[-1].offset is None:
            self.events[-1] = replace(self.events[-1], offset=ts)


class FeedbackTracker:
    """Streaming debounce automaton over the tracked parameters.

    consume() returns the event that just opened (if any) per parameter so a
    live service can push changes immediately; finalize() closes open events
    at the line's final timestamp and returns the complete ordered list.
    """

    def __init__(
        self,
        ranges: TargetRanges,
        debounce_frames: int = DEBOUNCE_FRAMES,
        parameters: Sequence[Parameter] = ALL_PARAMETERS,
    ):
        self._automata = [
            _ParamAutomaton(p, ranges.bounds(p), debounce_frames) for p in parameters
        ]
        self._last_ts: float | None = None

    def consume(self, sample: SkillSample) -> list[FeedbackEvent]:
        self._last_ts = sample.timestamp
        opened = []
        for a in self._automata:
            ev = a.step(sample)
            if ev is not None:
                opened.append(ev)
        return opened

    def finalize(self, end_ts: float | None = None) -> list[FeedbackEvent]:
        ts = end_ts if end_ts is not None else self._last_ts
        if ts is not None:
            for a in self._automata:
                a.finalize(ts)
        events: list[FeedbackEvent] = []
        for a in self._automata:
            events.extend(a.events)
        events.sort(key=lambda e: (e.onset, e.parameter.value))
        return events


def feedback_stream(
    samples: Iterable[SkillSample],
    ranges: TargetRanges,
    debounce_frames: int = DEBOUNCE_FRAMES,
    parameters: Sequence[Parameter] = ALL_PARAMETERS,
) -> list[FeedbackEvent]:
    """Batch wrapper: the full, closed event list for one line."""
    tracker = FeedbackTracker(ranges, debounce_frames, parameters)
    for s in samples:
        tracker.consume(s)
    return tracker.finalize()


@dataclass(frozen=True)
class ParamShare:
    """Frame counts and derived percentages for one parameter over one line."""

    within_n: int = 0
    above_n: int = 0
    below_n: int = 0

    @property
    def total(self) -> int:
        return self.within_n + self.above_n + self.below_n

    def _pct(self, n: int) -> float:
        return (n / self.total) * 100.0 if self.total else 0.0

    @property
    def pct_within(self) -> float:
        return self._pct(self.within_n)

    @property
    def pct_above(self) -> float:
        return self._pct(self.above_n)

    @property
    def pct_below(self) -> float:
        return self._pct(self.below_n)


@dataclass(frozen=True)
class LineSummary:
    shares: dict[Parameter, ParamShare]
    smoothness: float | None
    accuracy_mm: float | None
    valid_frame_count: int
    excluded: bool = False
    exclusion_reason: str | None = None


def summarize_line(
    samples: Sequence[SkillSample],
    ranges: TargetRanges,
    line_spec: WeldLineSpec | None = None,
    calib: CalibrationState | None = None,
) -> LineSummary:
    """Per-parameter within/above/below shares over valid, non-drift frames.

    smoothness is the population variance of the signed speed (IPM^2);
    accuracy is the mean absolute lateral (v-axis) tip deviation from the
    nominal line in mm, computed when both line_spec and calib are given.
    An empty or fully-excluded line yields an excluded summary instead of
    raising, so one bad line cannot abort a lesson.
    """
    counted = [s for s in samples if s.valid and not s.drift_flag]
    shares: dict[Parameter, ParamShare] = {}
    for p in ALL_PARAMETERS:
        w = a = b = 0
        for s in counted:
            value = _sample_value(s, p)
            if value is None:
                continue
            state = classify(value, ranges.bounds(p))
            if state is RangeState.WITHIN:
                w += 1
            elif state is RangeState.ABOVE:
                a += 1
            else:
                b += 1
        shares[p] = ParamShare(within_n=w, above_n=a, below_n=b)

    if not counted:
        reason = "empty line" if not samples else "no valid frames"
        return LineSummary(
            shares=shares,
            smoothness=None,
            accuracy_mm=None,
            valid_frame_count=0,
            excluded=True,
            exclusion_reason=reason,
        )

    speeds = [s.speed_signed for s in counted if s.speed_signed is not None]
    smoothness = float(np.var(speeds)) if speeds else None

    accuracy = None
    if line_spec is not None and calib is not None:
        line_v = float(world_to_grid(line_spec.start_point, calib)[1])
        accuracy = float(np.mean([abs(s.tip_v - line_v) for s in counted])) * MM_PER_M

    return LineSummary(
        shares=shares,
        smoothness=smoothness,
        accuracy_mm=accuracy,
        valid_frame_count=len(counted),
    )


# --- lesson state machine ------------------------------------------------------


@dataclass(frozen=True)
class ModulePlan:
    module: Module
    lines: int
    assisted: bool
    tracked: tuple[Parameter, ...]

    def __post_init__(self):
        if self.lines < 1:
            raise ValueError("a module needs at least one line")
        if self.module is Module.TEST and self.assisted:
            raise ValueError("the test module is always unassisted")


@dataclass(frozen=True)
class LessonPlan:
    modules: tuple[ModulePlan, ...]
    pass_threshold: float = 0.70
    retry_factor: float = 2.0

    def __post_init__(self):
        if not self.modules:
            raise ValueError("plan needs at least one module")
        if not 0.0 < self.pass_threshold <= 1.0:
            raise ValueError("pass_threshold must be in (0, 1]")
        if self.retry_factor < 1.0:
            raise ValueError("retry_factor must be >= 1")

    def retry_cap(self, module_index: int) -> int:
        return int(self.modules[module_index].lines * self.retry_factor)


def default_plan() -> LessonPlan:
    """Curriculum default: four 4-line learning modules, 12 combination lines,
    6 unassisted test lines."""
    all4 = ALL_PARAMETERS
    return LessonPlan(
        modules=(
            ModulePlan(Module.CTWD, 4, True, (Parameter.CTWD,)),
            ModulePlan(Module.TRAVEL_ANGLE, 4, True, (Parameter.TRAVEL_ANGLE,)),
            ModulePlan(Module.WORK_ANGLE, 4, True, (Parameter.WORK_ANGLE,)),
            ModulePlan(Module.SPEED, 4, True, (Parameter.SPEED,)),
            ModulePlan(Module.COMBINATION, 12, True, all4),
            ModulePlan(Module.TEST, 6, False, ()),
        )
    )


@dataclass(frozen=True)
class LessonState:
    """Cursor plus per-module line history. Immutable; advance() returns a new state."""

    plan: LessonPlan
    module_index: int = 0
    line_index: int = 0
    extra_lines: tuple[int, ...] = ()
    summaries: tuple[tuple[LineSummary, ...], ...] = ()
    complete: bool = False

    def __post_init__(self):
        n = len(self.plan.modules)
        if not self.extra_lines:
            object.__setattr__(self, "extra_lines", (0,) * n)
        if not self.summaries:
            object.__setattr__(self, "summaries", ((),) * n)

    @property
    def current_module(self) -> ModulePlan:
        return self.plan.modules[self.module_index]

    @property
    def lines_in_module(self) -> int:
        return self.current_module.lines + self.extra_lines[self.module_index]

    @property
    def cursor(self) -> tuple[Module, int]:
        return (self.current_module.module, self.line_index)


def _module_mean_within(plan_module: ModulePlan, summaries: Sequence[LineSummary]) -> float | None:
    """Mean pct_within of the tracked parameter(s) over non-excluded lines."""
    usable = [s for s in summaries if not s.excluded]
    if not usable or not plan_module.tracked:
        return None
    per_line = [
        float(np.mean([s.shares[p].pct_within for p in plan_module.tracked])) for s in usable
    ]
    return float(np.mean(per_line))


def advance(state: LessonState, summary: LineSummary) -> LessonState:
    """Record one finished line and move the cursor.

    At the end of a module the tracked-parameter mean pct_within must reach
    the pass threshold; otherwise a retry line is appended, bounded by the
    retry cap (default 2x the nominal count), after which the module
    completes regardless so a learner is never hard-stuck. Excluded lines
    occupy a slot but don't enter the threshold mean. Raises
    PlanExhaustedError when called after the final test line completed.
    """
    if state.complete:
        raise PlanExhaustedError("lesson already complete")

    m = state.module_index
    mod_summaries = state.summaries[m] + (summary,)
    new_summaries = tuple(
        mod_summaries if i == m else s for i, s in enumerate(state.summaries)
    )
    lines_done = state.line_index + 1
    base = replace(state, summaries=new_summaries)

    if lines_done < state.lines_in_module:
        return replace(base, line_index=lines_done)

    plan_module = state.current_module
    mean_within = _module_mean_within(plan_module, mod_summaries)
    threshold_pct = state.plan.pass_threshold * 100.0
    if plan_module.module is Module.TEST or not plan_module.tracked:
        passes = True  # evaluation modules have no gate
    else:
        # All-excluded history gives no evidence of competence: retry.
        passes = mean_within is not None and mean_within >= threshold_pct

    if not passes and state.lines_in_module < state.plan.retry_cap(m):
        extra = tuple(
            e + 1 if i == m else e for i, e in enumerate(state.extra_lines)
        )
        return replace(base, extra_lines=extra, line_index=lines_done)

    if m + 1 < len(state.plan.modules):
        return replace(base, module_index=m + 1, line_index=0)
    return replace(base, complete=True)


@dataclass(frozen=True)
class ModuleReport:
    module: Module
    line_summaries: tuple[LineSummary, ...]
    aggregate: dict[Parameter, ParamShare]
    excluded_count: int


def lesson_report(state: LessonState) -> list[ModuleReport]:
    """Frame-weighted per-module aggregation over non-excluded lines."""
    reports = []
    for plan_module, summaries in zip(state.plan.modules, state.summaries):
        if not summaries:
            continue
        usable = [s for s in summaries if not s.excluded]
        agg: dict[Parameter, ParamShare] = {}
        for p in ALL_PARAMETERS:
            agg[p] = ParamShare(
                within_n=sum(s.shares[p].within_n for s in usable),
                above_n=sum(s.shares[p].above_n for s in usable),
                below_n=sum(s.shares[p].below_n for s in usable),
            )
        reports.append(
            ModuleReport(
                module=plan_module.module,
                line_summaries=tuple(summaries),
                aggregate=agg,
                excluded_count=len(summaries) - len(usable),
            )
        )
    return reports
