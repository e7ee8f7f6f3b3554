"""Shared test helpers: independent-oracle math and random pose generation.

Everything here is deliberately written against numpy 4x4 homogeneous
matrices rather than the package's own quaternion algebra, so the two
implementations can check each other.
"""

from __future__ import annotations

import numpy as np

from aumi.geometry import Pose, Quaternion


def quat_to_mat(w: float, x: float, y: float, z: float) -> np.ndarray:
    """3x3 rotation matrix from a unit quaternion (standard expansion)."""
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def pose_to_hmat(p: Pose) -> np.ndarray:
    """4x4 homogeneous matrix for a Pose."""
    T = np.eye(4)
    T[:3, :3] = quat_to_mat(*p.rotation.to_wxyz())
    T[:3, 3] = p.translation
    return T


def mat_angle(R: np.ndarray) -> float:
    """Rotation angle of a 3x3 rotation matrix via the trace identity."""
    c = (np.trace(R) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


def random_quat(rng: np.random.Generator) -> Quaternion:
    w, x, y, z = rng.normal(size=4)
    return Quaternion(w, x, y, z)


def random_pose(rng: np.random.Generator, span: float = 1.0) -> Pose:
    t = rng.uniform(-span, span, size=3)
    return Pose((float(t[0]), float(t[1]), float(t[2])), random_quat(rng))
