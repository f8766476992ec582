"""Shared test oracles, independent of the implementation under test."""
import numpy as np
from scipy.spatial.transform import Rotation


def rotation_oracle(q_wxyz):
    """Rotation matrix via scipy (independent of weldkit.quat)."""
    w, x, y, z = q_wxyz
    return Rotation.from_quat([x, y, z, w]).as_matrix()


def rotate_oracle(q_wxyz, v):
    return rotation_oracle(q_wxyz) @ np.asarray(v, dtype=float)


def unit_quat(w, x, y, z):
    q = np.array([w, x, y, z], dtype=float)
    return q / np.linalg.norm(q)


def random_unit_quat(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)
