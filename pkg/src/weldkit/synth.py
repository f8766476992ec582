"""Synthetic trajectory and audio generators with exact ground truth.

gen_pass realizes a straight weld pass that satisfies its spec exactly
before any noise: constant speed along the line, constant CTWD above the
plane, constant travel/work angles. Noise and drift are injected by
separate, seeded, composable passes so every experiment stays reproducible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import quat
from .errors import InfeasibleSpecError, OutOfRangeEventError
from .pose import CalibrationState, PoseFrame, WeldLineSpec, world_to_grid
from .skills import SkillSample
from .units import MM_PER_M, ipm_to_mps

FRAME_RATE = 90.0

_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class DriftEvent:
    """A persistent tracking-offset step.

    axis: "normal", "travel", "side", or an explicit world-frame 3-vector.
    The offset applies from `time_s` onward; multiple events accumulate.
    """

    time_s: float
    axis: object
    step_m: float


@dataclass(frozen=True, eq=False)
class TrajectorySpec:
    """Parameters of one synthetic pass.

    duration_s may be omitted when speed is positive (derived from line
    length / speed); it is required for stationary jig poses.
    """

    line: WeldLineSpec
    speed_ipm: float = 20.0
    ctwd_mm: float = 10.0
    travel_angle_deg: float = 0.0
    work_angle_deg: float = 90.0
    tilt_sign: float = 1.0
    duration_s: float | None = None
    frame_rate: float = FRAME_RATE
    start_time: float = 0.0

    def duration(self) -> float:
        if self.duration_s is not None:
            return self.duration_s
        v = ipm_to_mps(self.speed_ipm)
        if v <= 0.0:
            raise InfeasibleSpecError("stationary spec needs an explicit duration_s")
        return self.line.length / v


def barrel_axis_for(
    calib: CalibrationState,
    travel_angle_deg: float,
    work_angle_deg: float,
    tilt_sign: float = 1.0,
) -> np.ndarray:
    """World barrel axis realizing the requested travel and work angles."""
    if not -90.0 < travel_angle_deg < 90.0:
        raise InfeasibleSpecError("travel angle must be strictly inside (-90, 90) degrees")
    if not 0.0 < work_angle_deg <= 90.0:
        raise InfeasibleSpecError("work angle must be in (0, 90] degrees")
    phi = math.radians(90.0 - work_angle_deg) * (1.0 if tilt_sign >= 0 else -1.0)
    theta = math.radians(travel_angle_deg)
    a = (
        math.tan(theta) * calib.weld_direction
        + math.tan(phi) * calib.side
        + calib.normal
    )
    return a / np.linalg.norm(a)


def gen_pass(
    spec: TrajectorySpec,
    calib: CalibrationState,
) -> tuple[list[PoseFrame], list[SkillSample]]:
    """Generate a noise-free pass plus exact per-frame ground truth.

    Ground-truth samples carry the target speed on every frame (truth has no
    warm-up) and the true grid tip coordinates.
    """
    if spec.frame_rate <= 0:
        raise InfeasibleSpecError("frame rate must be positive")
    if spec.speed_ipm < 0:
        raise InfeasibleSpecError("speed must be nonnegative")
    axis = barrel_axis_for(calib, spec.travel_angle_deg, spec.work_angle_deg, spec.tilt_sign)
    q = quat.from_two_vectors(quat.rotate(calib.tip_offset.rotation, _Z), axis)
    rot = quat.to_matrix(q)
    offset_world = rot @ calib.tip_offset.translation

    duration = spec.duration()
    n = int(round(duration * spec.frame_rate)) + 1
    dt = 1.0 / spec.frame_rate
    v_mps = ipm_to_mps(spec.speed_ipm)
    up = float(np.dot(axis, calib.normal))
    along = float(np.dot(axis, calib.weld_direction))
    lateral = float(np.dot(axis, calib.side))
    phi_deg = math.degrees(math.atan2(lateral, up))
    travel_deg = math.degrees(math.atan2(along, up))

    start_uvh = world_to_grid(spec.line.start_point, calib)
    frames: list[PoseFrame] = []
    truth: list[SkillSample] = []
    for k in range(n):
        t = spec.start_time + k * dt
        tip = (
            spec.line.start_point
            + v_mps * (k * dt) * spec.line.direction
            + (spec.ctwd_mm / MM_PER_M) * calib.normal
        )
        frames.append(
            PoseFrame(
                timestamp=t,
                frame_index=k,
                position=tip - offset_world,
                orientation=q.copy(),
                trigger_down=True,
            )
        )
        uvh = world_to_grid(tip, calib)
        truth.append(
            SkillSample(
                timestamp=t,
                frame_index=k,
                ctwd=spec.ctwd_mm,
                travel_angle=travel_deg,
                work_angle=min(max(90.0 - abs(phi_deg), 0.0), 90.0),
                work_tilt=phi_deg,
                tip_u=float(uvh[0]),
                tip_v=float(uvh[1]),
                raw_speed=spec.speed_ipm if k else 0.0,
                kalman_speed=spec.speed_ipm,
                speed=spec.speed_ipm,
                speed_signed=spec.speed_ipm,
            )
        )
    return frames, truth


def inject_noise(
    frames: list[PoseFrame],
    position_sd_m: float = 0.004,
    orientation_sd_deg: float = 0.5,
    seed: int = 0,
) -> list[PoseFrame]:
    """Add seeded white position noise and small random orientation wobble.

    SD 0 on both channels returns frames with identical field values. Each
    frame's orientation perturbation is an independent small rotation about
    a uniformly random axis with a Gaussian angle.
    """
    rng = np.random.default_rng(seed)
    out: list[PoseFrame] = []
    for f in frames:
        pos = f.position
        if position_sd_m > 0:
            pos = pos + rng.normal(0.0, position_sd_m, size=3)
        orient = f.orientation
        if orientation_sd_deg > 0:
            axis = rng.normal(size=3)
            axis /= np.linalg.norm(axis)
            angle = math.radians(rng.normal(0.0, orientation_sd_deg))
            orient = quat.multiply(quat.from_axis_angle(axis, angle), orient)
        out.append(replace(f, position=pos, orientation=orient))
    return out


def _resolve_axis(axis, calib: CalibrationState) -> np.ndarray:
    if isinstance(axis, str):
        try:
            return {
                "normal": calib.normal,
                "travel": calib.weld_direction,
                "side": calib.side,
            }[axis]
        except KeyError:
            raise ValueError(f"unknown drift axis name {axis!r}") from None
    a = np.asarray(axis, dtype=float)
    return a / np.linalg.norm(a)


def inject_drift(
    frames: list[PoseFrame],
    events: list[DriftEvent],
    calib: CalibrationState,
) -> tuple[list[PoseFrame], list[int]]:
    """Apply persistent position steps; orientation is untouched.

    Returns the shifted frames and the ground-truth onset frame index of
    each event (the first frame whose position includes the new offset).
    Offsets accumulate across events. Raises OutOfRangeEventError when an
    event time falls outside the stream's time span.
    """
    if not frames:
        raise OutOfRangeEventError("cannot inject drift into an empty stream")
    t0, t1 = frames[0].timestamp, frames[-1].timestamp
    onsets: list[int] = []
    steps: list[tuple[int, np.ndarray]] = []
    for ev in events:
        if not t0 <= ev.time_s <= t1:
            raise OutOfRangeEventError(
                f"drift event at {ev.time_s:.3f}s outside stream [{t0:.3f}, {t1:.3f}]s"
            )
        onset = next(i for i, f in enumerate(frames) if f.timestamp >= ev.time_s)
        onsets.append(onset)
        steps.append((onset, _resolve_axis(ev.axis, calib) * ev.step_m))

    out: list[PoseFrame] = []
    for i, f in enumerate(frames):
        offset = np.zeros(3)
        for onset, vec in steps:
            if i >= onset:
                offset = offset + vec
        out.append(replace(f, position=f.position + offset) if offset.any() else f)
    return out, onsets


@dataclass(frozen=True)
class AudioBurst:
    start_s: float
    duration_s: float
    amplitude: float


def synth_audio_levels(
    duration_s: float,
    bursts: list[AudioBurst],
    rate: float = FRAME_RATE,
    transmission_delay_s: float = 0.19,
    mic_distance_m: float = 0.5,
    noise_floor: float = 0.02,
    seed: int = 0,
) -> tuple[np.ndarray, np.ndarray, list[float]]:
    """Simulated microphone level stream for weld bursts.

    Levels arrive delayed by wireless transmission plus acoustic propagation
    (mic_distance / 343 m/s), mirroring the deployed headset-microphone
    chain where transmission, not distance, dominates latency. Returns
    (timestamps, levels, true burst start times).
    """
    rng = np.random.default_rng(seed)
    n = int(round(duration_s * rate)) + 1
    times = np.arange(n) / rate
    levels = np.abs(rng.normal(0.0, noise_floor, size=n)) if noise_floor > 0 else np.zeros(n)
    delay = transmission_delay_s + mic_distance_m / 343.0
    for b in bursts:
        lo = b.start_s + delay
        hi = lo + b.duration_s
        mask = (times >= lo) & (times < hi)
        levels[mask] = b.amplitude
    return times, np.clip(levels, 0.0, 1.0), [b.start_s for b in bursts]
