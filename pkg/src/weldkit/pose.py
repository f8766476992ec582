"""Torch pose model: frames, calibration, and the bench-grid coordinate system.

Conventions fixed here and relied on everywhere else:

* World frame is right-handed; quaternions are scalar-first (w, x, y, z).
* A calibration defines an orthonormal right-handed triad
  {weld_direction, side, normal} with side = normal x weld_direction.
  Grid coordinates of a world point are (u, v, h) = components along
  (weld_direction, side, normal) measured from the grid origin.
* The barrel axis points from the torch tip toward the torch body, so a
  torch held perpendicular to the bench has its axis along +normal and a
  work angle of 90 degrees.
* The tip offset is a rigid transform from the tracked controller to the
  torch tip. Its rotation is fixed at mount time; tap recalibration adjusts
  only the translation.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np

from . import quat
from .errors import (
    DegeneratePoseError,
    ImplausibleTapError,
    UncalibratedError,
)
from .units import MM_PER_M, M_PER_INCH

_Z = np.array([0.0, 0.0, 1.0])

#: Maximum allowed quaternion norm deviation before a frame is unusable.
QUAT_NORM_TOL = 1e-3

#: Tap corrections beyond this many metres are rejected as implausible.
MAX_TAP_CORRECTION_M = 0.10


class Parameter(Enum):
    """The four tracked skill parameters."""

    CTWD = "ctwd"
    TRAVEL_ANGLE = "travel_angle"
    WORK_ANGLE = "work_angle"
    SPEED = "speed"


def _vec3(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (3,):
        raise ValueError(f"expected a 3-vector, got shape {a.shape}")
    return a


def _vec4(v) -> np.ndarray:
    a = np.asarray(v, dtype=float)
    if a.shape != (4,):
        raise ValueError(f"expected a quaternion (w,x,y,z), got shape {a.shape}")
    return a


@dataclass(frozen=True, eq=False)
class PoseFrame:
    """One tracked controller sample at the nominal 90 Hz rate.

    `orientation` is stored as given; validity (norm within tolerance of 1)
    is checked when the frame is used, not at construction, so corrupt
    frames can flow through the pipeline and be marked invalid downstream.
    """

    timestamp: float
    frame_index: int
    position: np.ndarray
    orientation: np.ndarray
    trigger_down: bool = False
    audio_level: float | None = None
    tracking_confidence: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "position", _vec3(self.position))
        object.__setattr__(self, "orientation", _vec4(self.orientation))


@dataclass(frozen=True, eq=False)
class TorchPose:
    """Derived torch geometry: tip point and unit barrel axis (tip -> body)."""

    tip_position: np.ndarray
    barrel_axis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "tip_position", _vec3(self.tip_position))
        object.__setattr__(self, "barrel_axis", _vec3(self.barrel_axis))


@dataclass(frozen=True, eq=False)
class RigidOffset:
    """Controller-to-tip rigid transform. Rotation defaults to identity."""

    translation: np.ndarray
    rotation: np.ndarray = field(default_factory=quat.identity)

    def __post_init__(self):
        object.__setattr__(self, "translation", _vec3(self.translation))
        object.__setattr__(self, "rotation", _vec4(self.rotation))


@dataclass(frozen=True, eq=False)
class GridPlane:
    """Bench work plane: a point on it and its unit upward normal."""

    point: np.ndarray
    normal: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "point", _vec3(self.point))
        n = _vec3(self.normal)
        if abs(np.linalg.norm(n) - 1.0) > 1e-9:
            raise ValueError("plane normal must be a unit vector")
        object.__setattr__(self, "normal", n)


@dataclass(frozen=True, eq=False)
class CalibrationState:
    """Everything needed to map controller poses to bench-grid skill geometry."""

    grid_plane: GridPlane
    weld_direction: np.ndarray
    tip_offset: RigidOffset
    anchor_position: np.ndarray | None = None
    anchor_orientation: np.ndarray | None = None

    def __post_init__(self):
        w = _vec3(self.weld_direction)
        if abs(np.linalg.norm(w) - 1.0) > 1e-9:
            raise ValueError("weld_direction must be a unit vector")
        if abs(float(np.dot(w, self.grid_plane.normal))) > 1e-9:
            raise ValueError("weld_direction must lie in the grid plane")
        object.__setattr__(self, "weld_direction", w)
        if self.anchor_position is not None:
            object.__setattr__(self, "anchor_position", _vec3(self.anchor_position))
        if self.anchor_orientation is not None:
            object.__setattr__(self, "anchor_orientation", _vec4(self.anchor_orientation))

    @property
    def normal(self) -> np.ndarray:
        return self.grid_plane.normal

    @property
    def side(self) -> np.ndarray:
        """Lateral axis; {weld_direction, side, normal} is right-handed."""
        return np.cross(self.grid_plane.normal, self.weld_direction)

    @property
    def origin(self) -> np.ndarray:
        return self.grid_plane.point

    @classmethod
    def from_anchor(cls, position, orientation, tip_offset: RigidOffset) -> "CalibrationState":
        """Build a calibration from the anchor pose on the bench.

        The plane passes through the anchor position with the anchor's local
        +z as upward normal; the weld direction is the anchor's local +x
        projected into the plane.
        """
        position = _vec3(position)
        q = quat.normalize(_vec4(orientation))
        n = quat.rotate(q, _Z)
        n = n / np.linalg.norm(n)
        x = quat.rotate(q, np.array([1.0, 0.0, 0.0]))
        w = x - np.dot(x, n) * n
        wn = np.linalg.norm(w)
        if wn < 1e-9:
            raise ValueError("anchor x-axis is normal to the bench plane")
        return cls(
            grid_plane=GridPlane(point=position, normal=n),
            weld_direction=w / wn,
            tip_offset=tip_offset,
            anchor_position=position,
            anchor_orientation=q,
        )

    @classmethod
    def bench(cls, tip_offset: RigidOffset | None = None) -> "CalibrationState":
        """Reference calibration: plane z=0, weld direction +x, origin at 0."""
        off = tip_offset if tip_offset is not None else RigidOffset(np.array([0.0, 0.0, -0.10]))
        return cls.from_anchor(np.zeros(3), quat.identity(), off)


@dataclass(frozen=True, eq=False)
class WeldLineSpec:
    """A straight practice line on the bench plane."""

    start_point: np.ndarray
    direction: np.ndarray
    length: float

    def __post_init__(self):
        object.__setattr__(self, "start_point", _vec3(self.start_point))
        d = _vec3(self.direction)
        n = np.linalg.norm(d)
        if n == 0.0:
            raise ValueError("line direction must be nonzero")
        # Skip the division for already-unit input so construction is
        # idempotent bit-for-bit (serialized specs reload unchanged).
        if abs(n - 1.0) > 1e-12:
            d = d / n
        object.__setattr__(self, "direction", d)
        if not (self.length > 0.0):
            raise ValueError("line length must be positive")

    @classmethod
    def on_bench(
        cls,
        calib: CalibrationState,
        start_uv: tuple[float, float] = (0.0, 0.0),
        length: float = 5 * M_PER_INCH,
    ) -> "WeldLineSpec":
        """A line along the weld direction starting at grid (u, v)."""
        start = grid_to_world(np.array([start_uv[0], start_uv[1], 0.0]), calib)
        return cls(start_point=start, direction=calib.weld_direction, length=length)


@dataclass(frozen=True)
class TargetRanges:
    """Inclusive target intervals for the four parameters (display units)."""

    ctwd_mm: tuple[float, float] = (6.0, 15.0)
    travel_angle_deg: tuple[float, float] = (-10.0, 10.0)
    work_angle_deg: tuple[float, float] = (75.0, 90.0)
    speed_ipm: tuple[float, float] = (15.0, 25.0)

    def __post_init__(self):
        for name in ("ctwd_mm", "travel_angle_deg", "work_angle_deg", "speed_ipm"):
            lo, hi = getattr(self, name)
            if not lo < hi:
                raise ValueError(f"{name}: lower bound must be below upper bound")
            object.__setattr__(self, name, (float(lo), float(hi)))

    def bounds(self, parameter: Parameter) -> tuple[float, float]:
        return {
            Parameter.CTWD: self.ctwd_mm,
            Parameter.TRAVEL_ANGLE: self.travel_angle_deg,
            Parameter.WORK_ANGLE: self.work_angle_deg,
            Parameter.SPEED: self.speed_ipm,
        }[parameter]


def _require_calibration(calib: CalibrationState | None) -> CalibrationState:
    if calib is None:
        raise UncalibratedError("no calibration state; run the anchor calibration first")
    return calib


def derive_torch_pose(frame: PoseFrame, calib: CalibrationState | None) -> TorchPose:
    """Apply the tip offset to a controller pose.

    Raises DegeneratePoseError when the frame's quaternion norm deviates
    from 1 by more than QUAT_NORM_TOL.
    """
    calib = _require_calibration(calib)
    n = quat.norm(frame.orientation)
    if abs(n - 1.0) > QUAT_NORM_TOL:
        raise DegeneratePoseError(f"quaternion norm {n:.6f} outside tolerance")
    q = frame.orientation / n
    rot = quat.to_matrix(q)
    tip = frame.position + rot @ calib.tip_offset.translation
    axis = rot @ (quat.to_matrix(calib.tip_offset.rotation) @ _Z)
    return TorchPose(tip_position=tip, barrel_axis=axis / np.linalg.norm(axis))


def world_to_grid(point, calib: CalibrationState | None) -> np.ndarray:
    """World point -> (u, v, h) along (weld_direction, side, normal)."""
    calib = _require_calibration(calib)
    d = _vec3(point) - calib.origin
    return np.array([
        float(np.dot(d, calib.weld_direction)),
        float(np.dot(d, calib.side)),
        float(np.dot(d, calib.normal)),
    ])


def grid_to_world(uvh, calib: CalibrationState | None) -> np.ndarray:
    """Inverse of world_to_grid."""
    calib = _require_calibration(calib)
    u, v, h = np.asarray(uvh, dtype=float)
    return calib.origin + u * calib.weld_direction + v * calib.side + h * calib.normal


def tap_recalibrate(
    tap_frame: PoseFrame,
    known_tap_point,
    calib: CalibrationState | None,
) -> CalibrationState:
    """Re-fit the tip offset translation from a tap on a known bench point.

    The rotation part of the offset is left untouched. After recalibration
    the derived tip at the tap frame coincides with `known_tap_point`
    exactly, so its CTWD is 0 when the point lies on the plane. Corrections
    larger than MAX_TAP_CORRECTION_M raise ImplausibleTapError and leave the
    calibration unchanged.
    """
    calib = _require_calibration(calib)
    known = _vec3(known_tap_point)
    n = quat.norm(tap_frame.orientation)
    if abs(n - 1.0) > QUAT_NORM_TOL:
        raise DegeneratePoseError(f"tap frame quaternion norm {n:.6f} outside tolerance")
    rot = quat.to_matrix(tap_frame.orientation / n)
    new_translation = rot.T @ (known - tap_frame.position)
    correction = float(np.linalg.norm(new_translation - calib.tip_offset.translation))
    if correction > MAX_TAP_CORRECTION_M:
        raise ImplausibleTapError(
            f"tap correction {correction * MM_PER_M:.1f} mm exceeds "
            f"{MAX_TAP_CORRECTION_M * MM_PER_M:.0f} mm"
        )
    new_offset = RigidOffset(translation=new_translation, rotation=calib.tip_offset.rotation)
    return replace(calib, tip_offset=new_offset)
