import numpy as np
import pytest

from weldkit.pose import CalibrationState, RigidOffset


@pytest.fixture
def bench():
    """Reference calibration: plane z=0, weld direction +x, tip 0.10 m below controller."""
    return CalibrationState.bench()


@pytest.fixture
def zero_offset_bench():
    return CalibrationState.bench(tip_offset=RigidOffset(np.zeros(3)))
