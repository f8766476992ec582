"""Batch metrics: per-line deviations, pooled z-scores, and study tables.

The pipeline runs line MADs -> pooled z-scores -> per-participant and
group aggregates. A bundled per-participant segment table from a
two-sequence crossover training study (AR vs video feedback) feeds the
table-level regression and switch-delta checks, so the aggregate math
can be validated without raw motion logs.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .errors import (
    AllFramesExcludedError,
    DegenerateInputError,
    DegeneratePoolError,
    InsufficientLinesError,
)
from .feedback import Module
from .pose import Parameter, TargetRanges
from .skills import SkillSample

ALL_PARAMETERS = (
    Parameter.CTWD,
    Parameter.TRAVEL_ANGLE,
    Parameter.WORK_ANGLE,
    Parameter.SPEED,
)


class StudySequence(Enum):
    AR_FIRST = "AR-first"
    VIDEO_FIRST = "Video-first"

    @property
    def first_condition(self) -> "Condition":
        return Condition.AR if self is StudySequence.AR_FIRST else Condition.VIDEO

    @property
    def second_condition(self) -> "Condition":
        return Condition.VIDEO if self is StudySequence.AR_FIRST else Condition.AR


class Condition(Enum):
    AR = "AR"
    VIDEO = "Video"


class Segment(Enum):
    CTWD = "ctwd"
    TRAVEL_ANGLE = "travel_angle"
    WORK_ANGLE = "work_angle"
    SPEED = "speed"
    COMB1 = "comb1"
    COMB2 = "comb2"
    COMB3 = "comb3"
    TEST = "test"


ORDERED_SEGMENTS = tuple(Segment)
_COMBINATION_SEGMENTS = (Segment.COMB1, Segment.COMB2, Segment.COMB3)


class Pool(Enum):
    """Z-scoring population: unassisted test lines vs assisted practice."""

    TEST = "test"
    COMBINATION = "combination"


def pool_of(segment: Segment) -> Pool:
    return Pool.TEST if segment is Segment.TEST else Pool.COMBINATION


@dataclass(frozen=True)
class LineDeviation:
    """Per-parameter mean absolute deviation for one weld line."""

    participant: str
    sequence: StudySequence
    condition: Condition
    segment: Segment
    line_index: int
    deviations: Mapping[Parameter, float]

    def __post_init__(self):
        for p in ALL_PARAMETERS:
            v = self.deviations[p]
            if not (np.isfinite(v) and v >= 0.0):
                raise ValueError(f"deviation for {p.value} must be finite and >= 0")


@dataclass(frozen=True)
class ZScoredLine:
    participant: str
    sequence: StudySequence
    condition: Condition
    segment: Segment
    line_index: int
    pool: Pool
    z: Mapping[Parameter, float]
    composite: float


@dataclass(frozen=True)
class CellStats:
    mean_composite: float
    stability: float  # population SD of composites across the cell's lines
    line_count: int


@dataclass(frozen=True)
class ParticipantMetrics:
    participant: str
    sequence: StudySequence
    cells: Mapping[tuple[Condition, Pool], CellStats]
    segment_values: Mapping[Condition, Mapping[Segment, float]]
    slopes: Mapping[Condition, float | None]
    switch_delta: float | None


@dataclass(frozen=True)
class ParticipantSegmentRow:
    """One participant-condition row of composite scores per segment."""

    participant: str
    sequence: StudySequence
    condition: Condition
    values: Mapping[Segment, float]

    def ordered(self) -> list[float]:
        return [float(self.values[s]) for s in ORDERED_SEGMENTS]


def frame_range_deviation(value: float, bounds: tuple[float, float]) -> float:
    """Distance from value to the target interval; 0 inside."""
    lo, hi = bounds
    if not lo < hi:
        raise ValueError("range must satisfy lo < hi")
    if value < lo:
        return lo - value
    if value > hi:
        return value - hi
    return 0.0


def _classification_value(sample: SkillSample, parameter: Parameter) -> float | None:
    if not sample.valid or sample.drift_flag:
        return None
    if parameter is Parameter.SPEED:
        return sample.speed_signed
    return getattr(sample, parameter.value)


def mad_values(
    samples: Sequence[SkillSample],
    ranges: TargetRanges,
    exclude: frozenset[int] | set[int] = frozenset(),
) -> dict[Parameter, float]:
    """Per-parameter mean deviation-from-range over included frames.

    Frames that are invalid, drift-flagged, index-excluded, or missing a
    value (speed warm-up) do not contribute to that parameter's mean.
    """
    sums = {p: 0.0 for p in ALL_PARAMETERS}
    counts = {p: 0 for p in ALL_PARAMETERS}
    for i, s in enumerate(samples):
        if i in exclude:
            continue
        for p in ALL_PARAMETERS:
            v = _classification_value(s, p)
            if v is None or not np.isfinite(v):
                continue
            sums[p] += frame_range_deviation(v, ranges.bounds(p))
            counts[p] += 1
    for p in ALL_PARAMETERS:
        if counts[p] == 0:
            raise AllFramesExcludedError(
                f"no usable frames for {p.value}; line cannot be pooled"
            )
    return {p: sums[p] / counts[p] for p in ALL_PARAMETERS}


def line_mad(
    samples: Sequence[SkillSample],
    ranges: TargetRanges,
    *,
    participant: str,
    sequence: StudySequence,
    condition: Condition,
    segment: Segment,
    line_index: int,
    exclude: frozenset[int] | set[int] = frozenset(),
) -> LineDeviation:
    return LineDeviation(
        participant=str(participant),
        sequence=sequence,
        condition=condition,
        segment=segment,
        line_index=line_index,
        deviations=mad_values(samples, ranges, exclude),
    )


def pool_zscores(lines: Sequence[LineDeviation], pool: Pool) -> list[ZScoredLine]:
    """Standardize one pool's line MADs against that pool's statistics.

    The pool is joint across participants, sequences, and conditions:
    every line of the matching session type contributes to the mean and
    population SD used for standardization.
    """
    selected = [ln for ln in lines if pool_of(ln.segment) is pool]
    if len(selected) < 2:
        raise DegeneratePoolError(f"{pool.value} pool needs at least 2 lines")
    stats = {}
    for p in ALL_PARAMETERS:
        vals = np.array([ln.deviations[p] for ln in selected])
        sd = float(np.std(vals))
        if sd == 0.0:
            raise DegeneratePoolError(f"zero spread for {p.value} in {pool.value} pool")
        stats[p] = (float(np.mean(vals)), sd)
    out = []
    for ln in selected:
        z = {p: (ln.deviations[p] - stats[p][0]) / stats[p][1] for p in ALL_PARAMETERS}
        composite = float(np.mean([z[p] for p in ALL_PARAMETERS]))
        out.append(
            ZScoredLine(
                participant=ln.participant,
                sequence=ln.sequence,
                condition=ln.condition,
                segment=ln.segment,
                line_index=ln.line_index,
                pool=pool,
                z=z,
                composite=composite,
            )
        )
    return out


def zscore_lines(lines: Sequence[LineDeviation]) -> list[ZScoredLine]:
    """Z-score all lines, each against its own session-type pool."""
    by_key = {}
    for pool in Pool:
        if any(pool_of(ln.segment) is pool for ln in lines):
            for zl in pool_zscores(lines, pool):
                by_key[(zl.participant, zl.condition, zl.segment, zl.line_index)] = zl
    out = []
    for ln in lines:
        out.append(by_key[(ln.participant, ln.condition, ln.segment, ln.line_index)])
    return out


def participant_summary(zlines: Sequence[ZScoredLine]) -> ParticipantMetrics:
    """Cell means/stabilities plus per-condition trends for one participant."""
    if not zlines:
        raise InsufficientLinesError("no lines for participant")
    participants = {z.participant for z in zlines}
    if len(participants) != 1:
        raise ValueError("participant_summary expects a single participant's lines")
    sequences = {z.sequence for z in zlines}
    if len(sequences) != 1:
        raise ValueError("conflicting sequence labels for one participant")
    participant, sequence = participants.pop(), sequences.pop()

    cells: dict[tuple[Condition, Pool], CellStats] = {}
    for cond in Condition:
        for pool in Pool:
            composites = [z.composite for z in zlines if z.condition is cond and z.pool is pool]
            if not composites:
                continue
            if len(composites) < 2:
                raise InsufficientLinesError(
                    f"{cond.value}/{pool.value} cell has fewer than 2 lines"
                )
            cells[(cond, pool)] = CellStats(
                mean_composite=float(np.mean(composites)),
                stability=float(np.std(composites)),
                line_count=len(composites),
            )

    segment_values: dict[Condition, dict[Segment, float]] = {}
    for cond in Condition:
        per_segment = {}
        for seg in ORDERED_SEGMENTS:
            vals = [z.composite for z in zlines if z.condition is cond and z.segment is seg]
            if vals:
                per_segment[seg] = float(np.mean(vals))
        if per_segment:
            segment_values[cond] = per_segment

    slopes: dict[Condition, float | None] = {}
    for cond, per_segment in segment_values.items():
        if len(per_segment) == len(ORDERED_SEGMENTS):
            slopes[cond] = learning_slope([per_segment[s] for s in ORDERED_SEGMENTS])
        else:
            slopes[cond] = None

    first = sequence.first_condition
    second = sequence.second_condition
    delta = None
    if first in segment_values and second in segment_values:
        f_seg, s_seg = segment_values[first], segment_values[second]
        if all(s in f_seg for s in _COMBINATION_SEGMENTS) and all(
            s in s_seg for s in (Segment.CTWD, Segment.TRAVEL_ANGLE)
        ):
            delta = switch_delta(f_seg, s_seg)

    return ParticipantMetrics(
        participant=participant,
        sequence=sequence,
        cells=cells,
        segment_values=segment_values,
        slopes=slopes,
        switch_delta=delta,
    )


def segment_table(
    rows: Iterable[ParticipantSegmentRow],
) -> dict[tuple[StudySequence, Condition, Segment], float]:
    """Arithmetic mean over participants per (sequence, condition, segment).

    Contributions are summed in participant order, so the result is exactly
    invariant to the order rows arrive in.
    """
    acc: dict[tuple[StudySequence, Condition, Segment], list[tuple[str, float]]] = {}
    for row in rows:
        for seg in ORDERED_SEGMENTS:
            if seg in row.values:
                acc.setdefault((row.sequence, row.condition, seg), []).append(
                    (row.participant, float(row.values[seg]))
                )
    return {
        key: float(np.mean([v for _, v in sorted(vals)]))
        for key, vals in acc.items()
    }


def table_row(
    table: Mapping[tuple[StudySequence, Condition, Segment], float],
    sequence: StudySequence,
    condition: Condition,
) -> list[float]:
    return [table[(sequence, condition, seg)] for seg in ORDERED_SEGMENTS]


def learning_slope(values: Sequence[float]) -> float:
    """OLS slope of the 8 segment scores against segment index 1..8."""
    y = np.asarray(values, dtype=float)
    if y.shape != (8,) or not np.all(np.isfinite(y)):
        raise ValueError("learning_slope needs exactly 8 finite values")
    x = np.arange(1.0, 9.0)
    xc = x - x.mean()
    return float(np.dot(xc, y - y.mean()) / np.dot(xc, xc))


def switch_delta(
    first_segments: Mapping[Segment, float],
    second_segments: Mapping[Segment, float],
) -> float:
    """Immediate deviation change at the condition switch.

    Compares the start of the second condition (its two opening segments:
    distance and travel-angle practice) against the end of the first (its
    three combination segments).
    """
    start_second = np.mean(
        [second_segments[Segment.CTWD], second_segments[Segment.TRAVEL_ANGLE]]
    )
    end_first = np.mean([first_segments[s] for s in _COMBINATION_SEGMENTS])
    return float(start_second - end_first)


def group_switch_delta(
    rows: Sequence[ParticipantSegmentRow], sequence: StudySequence
) -> float:
    """Mean per-participant switch delta for one sequence group."""
    by_participant: dict[str, dict[Condition, ParticipantSegmentRow]] = {}
    for row in rows:
        if row.sequence is sequence:
            by_participant.setdefault(row.participant, {})[row.condition] = row
    deltas = []
    for conds in by_participant.values():
        if sequence.first_condition in conds and sequence.second_condition in conds:
            deltas.append(
                switch_delta(
                    conds[sequence.first_condition].values,
                    conds[sequence.second_condition].values,
                )
            )
    if not deltas:
        raise DegenerateInputError(f"no complete participants for {sequence.value}")
    return float(np.mean(deltas))


def first_condition_slopes(
    rows: Sequence[ParticipantSegmentRow], sequence: StudySequence
) -> list[float]:
    """Per-participant learning slopes over the group's first condition."""
    slopes = []
    for row in rows:
        if row.sequence is sequence and row.condition is sequence.first_condition:
            slopes.append(learning_slope(row.ordered()))
    return slopes


@dataclass(frozen=True)
class TTestResult:
    t: float
    p: float
    df: float


def two_sample_t(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Welch's unequal-variance t with a two-sided p-value."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if x.size < 2 or y.size < 2:
        raise DegenerateInputError("each group needs at least 2 values")
    vx = x.var(ddof=1)
    vy = y.var(ddof=1)
    if vx == 0.0 and vy == 0.0:
        raise DegenerateInputError("both groups have zero variance")
    se2 = vx / x.size + vy / y.size
    t = float((x.mean() - y.mean()) / np.sqrt(se2))
    df = se2**2 / (
        (vx / x.size) ** 2 / (x.size - 1) + (vy / y.size) ** 2 / (y.size - 1)
    )
    p = float(2.0 * _scipy_stats.t.sf(abs(t), df))
    return TTestResult(t=t, p=p, df=float(df))


@dataclass(frozen=True)
class LineData:
    """One recorded line plus the study metadata analytics needs."""

    participant: str
    sequence: StudySequence
    condition: Condition
    module: Module
    line_index: int
    samples: tuple[SkillSample, ...]


_MODULE_SEGMENT = {
    Module.CTWD: Segment.CTWD,
    Module.TRAVEL_ANGLE: Segment.TRAVEL_ANGLE,
    Module.WORK_ANGLE: Segment.WORK_ANGLE,
    Module.SPEED: Segment.SPEED,
    Module.TEST: Segment.TEST,
}


def segment_for(module: Module, line_index: int) -> Segment:
    """Map a lesson line to its study segment; combination splits in 3."""
    if module is Module.COMBINATION:
        return _COMBINATION_SEGMENTS[min(line_index // 4, 2)]
    return _MODULE_SEGMENT[module]


def lines_from_sessions(
    lines: Iterable[LineData], ranges: TargetRanges
) -> list[LineDeviation]:
    """Line MADs for every line with usable frames; excluded lines drop out."""
    out = []
    for ld in lines:
        try:
            out.append(
                line_mad(
                    ld.samples,
                    ranges,
                    participant=ld.participant,
                    sequence=ld.sequence,
                    condition=ld.condition,
                    segment=segment_for(ld.module, ld.line_index),
                    line_index=ld.line_index,
                )
            )
        except AllFramesExcludedError:
            continue
    return out


def parse_segment_rows(text: str) -> list[ParticipantSegmentRow]:
    """Rows from CSV with columns participant, sequence, condition, then
    one column per segment in order."""
    rows = []
    for rec in csv.DictReader(text.splitlines()):
        rows.append(
            ParticipantSegmentRow(
                participant=rec["participant"],
                sequence=StudySequence(rec["sequence"]),
                condition=Condition(rec["condition"]),
                values={seg: float(rec[seg.value]) for seg in ORDERED_SEGMENTS},
            )
        )
    return rows


def load_crossover_segments() -> list[ParticipantSegmentRow]:
    """Bundled per-participant segment scores from the crossover study."""
    text = resources.files("weldkit").joinpath("data/crossover_segments.csv").read_text()
    return parse_segment_rows(text)
