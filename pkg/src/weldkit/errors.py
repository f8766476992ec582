"""Exception taxonomy for the weldkit engine.

Every error raised across module boundaries derives from WeldkitError so
callers (CLI, socket service) can map failures to typed protocol errors.
"""


class WeldkitError(Exception):
    """Base class for all weldkit errors."""


# -- geometry / calibration ------------------------------------------------

class UncalibratedError(WeldkitError):
    """An operation needing a calibration state was called without one."""


class DegeneratePoseError(WeldkitError):
    """Pose frame unusable: quaternion norm too far from 1."""


class DegenerateOrientationError(WeldkitError):
    """Barrel axis aligned with a reference axis; the angle is undefined."""


class ImplausibleTapError(WeldkitError):
    """Tap recalibration demanded a correction too large to be a real tap."""


# -- numerics ---------------------------------------------------------------

class NumericalError(WeldkitError):
    """A filter covariance or similar quantity lost positive semidefiniteness."""


# -- feedback / lesson flow ---------------------------------------------------

class EmptyLineError(WeldkitError):
    """A weld line contained no frames at all."""


class PlanExhaustedError(WeldkitError):
    """advance() was called after the final test line completed."""


# -- triggering ---------------------------------------------------------------

class InsufficientHistoryError(WeldkitError):
    """Not enough frames before the acoustic onset to shift the window."""


# -- integrity / analytics ----------------------------------------------------

class DegenerateInputError(WeldkitError):
    """Statistical input empty or without variance where variance is required."""


class AllFramesExcludedError(WeldkitError):
    """Every frame of a line was invalid or drift-flagged."""


class DegeneratePoolError(WeldkitError):
    """A z-score pool has fewer than two lines or zero spread."""


class InsufficientLinesError(WeldkitError):
    """A participant cell has too few lines to compute stability."""


class InfeasibleSpecError(WeldkitError):
    """A synthetic trajectory spec cannot be realized (angles/speed out of domain)."""


class OutOfRangeEventError(WeldkitError):
    """An injected event's time falls outside the frame stream."""


# -- persistence / transport ---------------------------------------------------

class SchemaError(WeldkitError):
    """A session document failed validation. `field` names the first bad field."""

    def __init__(self, field: str, message: str = ""):
        self.field = field
        detail = f"invalid field {field!r}"
        if message:
            detail += f": {message}"
        super().__init__(detail)


class StorageError(WeldkitError):
    """Persisting or loading a session log failed at the I/O layer."""


class SequenceError(WeldkitError):
    """A frame arrived out of order (non-increasing timestamp or index)."""
