"""Skill parameter extraction from torch pose streams.

Per frame the extractor derives four technique parameters:

* CTWD — signed perpendicular tip-to-plane distance in mm (negative kept,
  the screening layer needs it).
* Travel angle — signed tilt toward (+, push) or away from (-, drag) the
  travel direction: atan2(a.weld_direction, a.normal) in degrees.
* Work angle — 90 deg minus the absolute lateral tilt
  atan2(a.side, a.normal), clamped to [0, 90].
* Travel speed — mean of the Kalman-filtered in-plane velocity projected
  on the weld direction over a 0.5 s sliding window, in IPM. Absent until
  the window first fills. The magnitude is the display value; the signed
  mean drives classification so sustained backward travel reads Below.

Grid-plane position is smoothed by a hand-rolled constant-velocity Kalman
filter (state u, v, du, dv); CTWD and the angles use raw, unfiltered
geometry.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DegenerateOrientationError, DegeneratePoseError, NumericalError
from .pose import CalibrationState, PoseFrame, TorchPose, derive_torch_pose, world_to_grid
from .units import IPM_PER_MPS, MM_PER_M

#: Default sliding window for speed estimation, seconds (45 frames at 90 Hz).
SPEED_WINDOW_S = 0.5

#: Kalman defaults: acceleration-noise SD and measurement-noise SD.
PROCESS_NOISE_ACCEL = 0.5
MEASUREMENT_NOISE_SD = 0.004

_PSD_TOL = 1e-9
_AXIS_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class SkillSample:
    """One frame's skill parameters.

    Angle and distance fields are NaN when ``valid`` is false. ``speed`` and
    ``speed_signed`` are None during the warm-up before the speed window
    first fills. ``raw_speed`` is the unfiltered frame-to-frame projection;
    ``kalman_speed`` is the instantaneous filtered projection (the drift
    detector's input). ``tip_u``/``tip_v`` are grid coordinates in metres.
    """

    timestamp: float
    frame_index: int
    ctwd: float
    travel_angle: float
    work_angle: float
    work_tilt: float
    tip_u: float
    tip_v: float
    raw_speed: float
    kalman_speed: float
    speed: float | None = None
    speed_signed: float | None = None
    valid: bool = True
    drift_flag: bool = False


@dataclass(frozen=True, eq=False)
class KalmanState:
    """Constant-velocity filter state in grid-plane coordinates."""

    t: float
    x: np.ndarray  # (u, v, du/dt, dv/dt)
    P: np.ndarray  # 4x4 covariance
    process_noise_accel: float = PROCESS_NOISE_ACCEL
    measurement_noise_sd: float = MEASUREMENT_NOISE_SD

    def __post_init__(self):
        object.__setattr__(self, "x", np.asarray(self.x, dtype=float).reshape(4))
        object.__setattr__(self, "P", np.asarray(self.P, dtype=float).reshape(4, 4))

    @property
    def velocity_u(self) -> float:
        return float(self.x[2])


def kalman_init(
    u: float,
    v: float,
    t: float = 0.0,
    process_noise_accel: float = PROCESS_NOISE_ACCEL,
    measurement_noise_sd: float = MEASUREMENT_NOISE_SD,
    velocity_prior_var: float = 1.0,
) -> KalmanState:
    """Start a filter at a measured position with an uninformative velocity."""
    r = measurement_noise_sd**2
    P = np.diag([r, r, velocity_prior_var, velocity_prior_var])
    return KalmanState(
        t=t,
        x=np.array([u, v, 0.0, 0.0]),
        P=P,
        process_noise_accel=process_noise_accel,
        measurement_noise_sd=measurement_noise_sd,
    )


def kalman_step(state: KalmanState, measured_uv: tuple[float, float], dt: float) -> KalmanState:
    """One predict+update cycle with a position-only measurement.

    Process noise follows the white-acceleration model; the covariance
    update uses the Joseph form and is re-symmetrized. Raises NumericalError
    if the covariance still loses positive semidefiniteness, which signals
    mis-set noise parameters rather than a recoverable condition.
    """
    if not dt > 0.0:
        raise ValueError("dt must be positive")
    if np.linalg.eigvalsh(0.5 * (state.P + state.P.T))[0] < -_PSD_TOL:
        raise NumericalError("Kalman covariance lost positive semidefiniteness")
    q2 = state.process_noise_accel**2
    r = state.measurement_noise_sd**2

    F = np.eye(4)
    F[0, 2] = F[1, 3] = dt
    q11 = q2 * dt**4 / 4.0
    q13 = q2 * dt**3 / 2.0
    q33 = q2 * dt**2
    Q = np.array([
        [q11, 0.0, q13, 0.0],
        [0.0, q11, 0.0, q13],
        [q13, 0.0, q33, 0.0],
        [0.0, q13, 0.0, q33],
    ])
    H = np.zeros((2, 4))
    H[0, 0] = H[1, 1] = 1.0
    R = r * np.eye(2)

    x_pred = F @ state.x
    P_pred = F @ state.P @ F.T + Q

    z = np.asarray(measured_uv, dtype=float).reshape(2)
    innovation = z - H @ x_pred
    S = H @ P_pred @ H.T + R
    K = P_pred @ H.T @ np.linalg.inv(S)
    x_new = x_pred + K @ innovation
    ikh = np.eye(4) - K @ H
    P_new = ikh @ P_pred @ ikh.T + K @ R @ K.T
    P_new = 0.5 * (P_new + P_new.T)

    if np.linalg.eigvalsh(P_new)[0] < -_PSD_TOL:
        raise NumericalError("Kalman covariance lost positive semidefiniteness")

    return KalmanState(
        t=state.t + dt,
        x=x_new,
        P=P_new,
        process_noise_accel=state.process_noise_accel,
        measurement_noise_sd=state.measurement_noise_sd,
    )


def compute_ctwd(tip: TorchPose, calib: CalibrationState) -> float:
    """Signed perpendicular distance tip -> plane, in mm (negative = below)."""
    return float(world_to_grid(tip.tip_position, calib)[2]) * MM_PER_M


def _axis_components(tip: TorchPose, calib: CalibrationState) -> tuple[float, float, float]:
    a = tip.barrel_axis
    return (
        float(np.dot(a, calib.weld_direction)),
        float(np.dot(a, calib.side)),
        float(np.dot(a, calib.normal)),
    )


def compute_travel_angle(tip: TorchPose, calib: CalibrationState) -> float:
    """Signed travel tilt in degrees; positive = push (toward travel)."""
    along, lateral, up = _axis_components(tip, calib)
    if abs(lateral) >= 1.0 - _AXIS_ALIGN_TOL:
        raise DegenerateOrientationError("barrel axis parallel to the side axis; travel tilt undefined")
    return math.degrees(math.atan2(along, up))


def lateral_tilt(tip: TorchPose, calib: CalibrationState) -> float:
    """Signed lateral tilt in degrees (toward +side positive)."""
    along, lateral, up = _axis_components(tip, calib)
    if abs(along) >= 1.0 - _AXIS_ALIGN_TOL:
        raise DegenerateOrientationError("barrel axis parallel to the weld direction; lateral tilt undefined")
    return math.degrees(math.atan2(lateral, up))


def compute_work_angle(tip: TorchPose, calib: CalibrationState) -> float:
    """Work angle = 90 deg - |lateral tilt|, clamped to [0, 90]."""
    phi = lateral_tilt(tip, calib)
    return min(max(90.0 - abs(phi), 0.0), 90.0)


def estimate_speed(
    states: Sequence[KalmanState],
    window: float = SPEED_WINDOW_S,
) -> float | None:
    """Windowed mean of the filtered weld-direction velocity, in IPM (signed).

    States live in grid coordinates, where the u axis IS the weld direction,
    so no further projection is needed. Returns None until the states span
    the full window; the caller decides between signed and magnitude use.
    """
    if len(states) < 2:
        return None
    t_end = states[-1].t
    if t_end - states[0].t < window:
        return None
    in_window = [s.velocity_u for s in states if s.t >= t_end - window]
    return float(np.mean(in_window)) * IPM_PER_MPS


class SkillExtractor:
    """Streaming frame -> SkillSample converter.

    Keeps the Kalman state, the speed window, and the previous valid frame.
    Degenerate frames (corrupt quaternion, axis-aligned orientation) yield
    valid=False samples and leave all internal state untouched, so isolated
    glitches do not disturb their neighbors.
    """

    def __init__(
        self,
        calib: CalibrationState,
        window_s: float = SPEED_WINDOW_S,
        process_noise_accel: float = PROCESS_NOISE_ACCEL,
        measurement_noise_sd: float = MEASUREMENT_NOISE_SD,
    ):
        self.calib = calib
        self.window_s = window_s
        self.process_noise_accel = process_noise_accel
        self.measurement_noise_sd = measurement_noise_sd
        self._kalman: KalmanState | None = None
        self._states: deque[KalmanState] = deque()
        self._first_valid_t: float | None = None
        self._prev_u: float | None = None
        self._prev_t: float | None = None

    def consume(self, f: PoseFrame) -> SkillSample:
        try:
            tip = derive_torch_pose(f, self.calib)
            travel = compute_travel_angle(tip, self.calib)
            tilt = lateral_tilt(tip, self.calib)
        except (DegeneratePoseError, DegenerateOrientationError):
            return SkillSample(
                timestamp=f.timestamp,
                frame_index=f.frame_index,
                ctwd=math.nan,
                travel_angle=math.nan,
                work_angle=math.nan,
                work_tilt=math.nan,
                tip_u=math.nan,
                tip_v=math.nan,
                raw_speed=math.nan,
                kalman_speed=math.nan,
                valid=False,
            )

        work = min(max(90.0 - abs(tilt), 0.0), 90.0)
        u, v, h = world_to_grid(tip.tip_position, self.calib)
        ctwd = h * MM_PER_M

        if self._kalman is None:
            self._kalman = kalman_init(
                u,
                v,
                t=f.timestamp,
                process_noise_accel=self.process_noise_accel,
                measurement_noise_sd=self.measurement_noise_sd,
            )
            raw_speed = 0.0
            self._first_valid_t = f.timestamp
        else:
            dt = f.timestamp - self._kalman.t
            self._kalman = kalman_step(self._kalman, (u, v), dt)
            raw_speed = (u - self._prev_u) / (f.timestamp - self._prev_t) * IPM_PER_MPS
        self._prev_u, self._prev_t = u, f.timestamp
        self._states.append(self._kalman)
        horizon = f.timestamp - self.window_s
        while self._states and self._states[0].t < horizon:
            self._states.popleft()

        speed_signed: float | None = None
        if f.timestamp - self._first_valid_t >= self.window_s:
            speed_signed = float(np.mean([s.velocity_u for s in self._states])) * IPM_PER_MPS

        return SkillSample(
            timestamp=f.timestamp,
            frame_index=f.frame_index,
            ctwd=ctwd,
            travel_angle=travel,
            work_angle=work,
            work_tilt=tilt,
            tip_u=float(u),
            tip_v=float(v),
            raw_speed=raw_speed,
            kalman_speed=self._kalman.velocity_u * IPM_PER_MPS,
            speed=abs(speed_signed) if speed_signed is not None else None,
            speed_signed=speed_signed,
        )


def extract_samples(
    frames: Iterable[PoseFrame],
    calib: CalibrationState,
    window_s: float = SPEED_WINDOW_S,
    process_noise_accel: float = PROCESS_NOISE_ACCEL,
    measurement_noise_sd: float = MEASUREMENT_NOISE_SD,
) -> list[SkillSample]:
    """Batch wrapper around SkillExtractor; deterministic for identical input."""
    ext = SkillExtractor(
        calib,
        window_s=window_s,
        process_noise_accel=process_noise_accel,
        measurement_noise_sd=measurement_noise_sd,
    )
    return [ext.consume(f) for f in frames]


def flag_drift(samples: Sequence[SkillSample], indices: Iterable[int]) -> list[SkillSample]:
    """Copy of `samples` with drift_flag set at the given indices."""
    idx = set(indices)
    return [replace(s, drift_flag=True) if i in idx else s for i, s in enumerate(samples)]
