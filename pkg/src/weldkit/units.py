"""Unit constants. Geometry is SI internally; mm, degrees and IPM at the API surface."""

M_PER_INCH = 0.0254
MM_PER_M = 1000.0

# metres/second -> inches/minute (travel speed display unit)
IPM_PER_MPS = 60.0 / M_PER_INCH


def mps_to_ipm(v: float) -> float:
    return v * IPM_PER_MPS


def ipm_to_mps(v: float) -> float:
    return v / IPM_PER_MPS
