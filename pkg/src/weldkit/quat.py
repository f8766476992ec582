"""Quaternion helpers, scalar-first (w, x, y, z), right-handed.

Rotations act on column vectors: rotate(q, v) == to_matrix(q) @ v. Inputs are
plain numpy arrays; nothing here normalizes implicitly except where noted.
"""
from __future__ import annotations

import numpy as np

IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def identity() -> np.ndarray:
    return IDENTITY.copy()


def norm(q) -> float:
    return float(np.linalg.norm(q))


def normalize(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0:
        raise ValueError("cannot normalize a zero quaternion")
    return q / n


def conjugate(q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    return np.array([q[0], -q[1], -q[2], -q[3]])


def multiply(a, b) -> np.ndarray:
    """Hamilton product a*b (apply b's rotation first, then a's)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array([
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    ])


def to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion."""
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def rotate(q, v) -> np.ndarray:
    return to_matrix(q) @ np.asarray(v, dtype=float)


def from_axis_angle(axis, angle_rad: float) -> np.ndarray:
    axis = np.asarray(axis, dtype=float)
    n = np.linalg.norm(axis)
    if n == 0.0:
        raise ValueError("rotation axis must be nonzero")
    half = 0.5 * angle_rad
    return np.concatenate(([np.cos(half)], np.sin(half) * axis / n))


def from_two_vectors(a, b) -> np.ndarray:
    """Shortest-arc rotation taking direction a to direction b."""
    a = np.asarray(a, dtype=float) / np.linalg.norm(a)
    b = np.asarray(b, dtype=float) / np.linalg.norm(b)
    axis = np.cross(a, b)
    s = float(np.linalg.norm(axis))
    d = float(np.dot(a, b))
    if s == 0.0:
        if d > 0.0:
            return identity()
        # Antiparallel: 180 degrees about any axis orthogonal to a.
        helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
        return from_axis_angle(np.cross(a, helper), np.pi)
    # atan2 keeps tiny rotations exact where 1 + d would round them away.
    return from_axis_angle(axis, float(np.arctan2(s, d)))


def relative_angle(q1, q2) -> float:
    """Rotation angle in radians between two unit quaternions."""
    d = abs(float(np.dot(np.asarray(q1, float), np.asarray(q2, float))))
    return 2.0 * float(np.arccos(np.clip(d, -1.0, 1.0)))
