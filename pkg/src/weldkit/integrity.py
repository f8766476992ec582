"""Tracking-integrity checks: drift detection, line screening, bootstrap risk.

Controller drift shows up as a sudden jump in derived tip geometry while
the rotation stream stays calm; genuine reorientation moves both. Lines
with impossible geometry (tip below the workpiece, wildly distant start)
are screened out before analytics. The bootstrap estimates how likely a
multi-line sequence is to contain at least one drifted line.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from . import quat
from .errors import DegenerateInputError
from .skills import SkillSample, flag_drift

DRIFT_CTWD_STEP_MM = 20.0
DRIFT_SPEED_STEP_IPM = 50.0
DRIFT_ROTATION_GATE_DEG_S = 30.0
NEGATIVE_CTWD_TOLERANCE_MM = 1.0
EXTREME_INITIAL_CTWD_MM = 60.0
INITIAL_SCREEN_FRAMES = 10


@dataclass(frozen=True)
class LineDriftReport:
    """Drift flags for one weld line; contiguous flags form one event."""

    flagged_indices: tuple[int, ...]
    event_spans: tuple[tuple[int, int], ...]
    frame_count: int

    @property
    def event_count(self) -> int:
        return len(self.event_spans)

    @property
    def affected_frame_fraction(self) -> float:
        if self.frame_count == 0:
            return 0.0
        return len(self.flagged_indices) / self.frame_count


@dataclass(frozen=True)
class DriftReport:
    lines: tuple[LineDriftReport, ...]

    @property
    def drift_line_fraction(self) -> float:
        """Fraction of lines containing at least one drift event."""
        if not self.lines:
            return 0.0
        return sum(1 for ln in self.lines if ln.event_count > 0) / len(self.lines)


def _spans(indices: Sequence[int]) -> tuple[tuple[int, int], ...]:
    spans = []
    for i in indices:
        if spans and i == spans[-1][1] + 1:
            spans[-1][1] = i
        else:
            spans.append([i, i])
    return tuple((a, b) for a, b in spans)


def detect_drift(
    samples: Sequence[SkillSample],
    orientations: Sequence[np.ndarray],
    ctwd_step_mm: float = DRIFT_CTWD_STEP_MM,
    speed_step_ipm: float = DRIFT_SPEED_STEP_IPM,
    rotation_gate_deg_s: float = DRIFT_ROTATION_GATE_DEG_S,
) -> LineDriftReport:
    """Flag frames whose tip geometry jumps while rotation stays stable.

    A frame is flagged when its CTWD or filtered speed steps implausibly
    from the previous frame while the controller's angular velocity over
    the same frame stays under the gate; a fast rotation explains large
    derived-geometry changes, so those frames pass. Pairs involving
    invalid frames are never flagged, and the speed channel only arms
    once the speed display warm-up has completed (speed present on both
    frames): before that the filter's velocity estimate is still
    converging and has no established value to jump from.
    """
    n = len(samples)
    if n != len(orientations):
        raise ValueError("samples and orientations must align per frame")
    if n < 2:
        return LineDriftReport((), (), n)

    flagged = [
        i
        for i in range(1, n)
        if drift_pair_flag(
            samples[i - 1],
            orientations[i - 1],
            samples[i],
            orientations[i],
            ctwd_step_mm=ctwd_step_mm,
            speed_step_ipm=speed_step_ipm,
            rotation_gate_deg_s=rotation_gate_deg_s,
        )
    ]
    return LineDriftReport(tuple(flagged), _spans(flagged), n)


def drift_pair_flag(
    prev: SkillSample,
    prev_orientation: np.ndarray,
    cur: SkillSample,
    cur_orientation: np.ndarray,
    ctwd_step_mm: float = DRIFT_CTWD_STEP_MM,
    speed_step_ipm: float = DRIFT_SPEED_STEP_IPM,
    rotation_gate_deg_s: float = DRIFT_ROTATION_GATE_DEG_S,
) -> bool:
    """Whether the later frame of an adjacent pair shows a drift step.

    Single source of truth for the per-pair predicate so streaming
    monitors flag exactly the frames that batch detection would.
    """
    d_ctwd = abs(cur.ctwd - prev.ctwd)
    speed_armed = cur.speed is not None and prev.speed is not None
    d_speed = abs(cur.kalman_speed - prev.kalman_speed) if speed_armed else 0.0
    if not (d_ctwd > ctwd_step_mm or d_speed > speed_step_ipm):
        return False
    dt = cur.timestamp - prev.timestamp
    if dt <= 0:
        return False
    qa = np.asarray(prev_orientation, dtype=float)
    qb = np.asarray(cur_orientation, dtype=float)
    try:
        ang_vel = np.degrees(quat.relative_angle(qa, qb)) / dt
    except Exception:
        return False  # unusable rotation data cannot corroborate a jump
    return bool(ang_vel < rotation_gate_deg_s)


def mark_drift(
    samples: Sequence[SkillSample], report: LineDriftReport
) -> list[SkillSample]:
    """Copies of samples with drift_flag set at the report's indices."""
    return flag_drift(samples, report.flagged_indices)


class ScreeningKind(Enum):
    VALID = "valid"
    EXCLUDED_NEGATIVE_CTWD = "excluded_negative_ctwd"
    FLAGGED_EXTREME_INITIAL_CTWD = "flagged_extreme_initial_ctwd"


@dataclass(frozen=True)
class ScreeningVerdict:
    kind: ScreeningKind
    detail: str = ""

    @property
    def excluded(self) -> bool:
        return self.kind is ScreeningKind.EXCLUDED_NEGATIVE_CTWD

    @property
    def flagged(self) -> bool:
        return self.kind is ScreeningKind.FLAGGED_EXTREME_INITIAL_CTWD


def screen_line(samples: Sequence[SkillSample]) -> ScreeningVerdict:
    """Screen one line's samples for impossible tip geometry.

    A tip meaningfully below the workpiece plane (CTWD under -1 mm) is
    physically impossible and excludes the line; a line opening far above
    the plate (first ten valid frames averaging beyond 60 mm) is flagged
    for review but kept. The negative-CTWD rule quantifies over all
    frames, so it is insensitive to frame order.
    """
    ctwd = [s.ctwd for s in samples if s.valid and np.isfinite(s.ctwd)]
    if not ctwd:
        return ScreeningVerdict(ScreeningKind.VALID, "no valid frames to screen")
    lowest = min(ctwd)
    if lowest < -NEGATIVE_CTWD_TOLERANCE_MM:
        return ScreeningVerdict(
            ScreeningKind.EXCLUDED_NEGATIVE_CTWD,
            f"CTWD reaches {lowest:.1f} mm below the workpiece",
        )
    initial = float(np.mean(ctwd[:INITIAL_SCREEN_FRAMES]))
    if initial > EXTREME_INITIAL_CTWD_MM:
        return ScreeningVerdict(
            ScreeningKind.FLAGGED_EXTREME_INITIAL_CTWD,
            f"first frames average {initial:.1f} mm from the workpiece",
        )
    return ScreeningVerdict(ScreeningKind.VALID)


@dataclass(frozen=True)
class BootstrapEstimate:
    probability: float
    ci95: tuple[float, float]
    samples: int


def bootstrap_drift_probability(
    line_outcomes: Sequence[bool],
    k: int,
    samples: int = 10000,
    seed: int = 0,
) -> BootstrapEstimate:
    """P(a k-line sequence contains >= 1 drifted line), by resampling.

    Each bootstrap draw resamples k line outcomes with replacement from
    the observed ones; the estimate is the fraction of draws containing
    a drifted line, with a normal-approximation 95% Monte Carlo interval.
    Deterministic for a given seed.
    """
    outcomes = np.asarray(line_outcomes, dtype=bool)
    if outcomes.size == 0:
        raise DegenerateInputError("no line outcomes to resample")
    if k < 1:
        raise ValueError("k must be at least 1")
    if samples < 1:
        raise ValueError("samples must be at least 1")
    rng = np.random.default_rng(seed)
    draws = rng.integers(0, outcomes.size, size=(samples, k))
    hits = outcomes[draws].any(axis=1)
    p = float(hits.mean())
    se = np.sqrt(p * (1.0 - p) / samples)
    ci = (max(0.0, p - 1.96 * se), min(1.0, p + 1.96 * se))
    return BootstrapEstimate(p, ci, samples)
