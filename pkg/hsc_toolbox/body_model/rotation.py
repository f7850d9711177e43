"""Axis-angle helpers on top of scipy's Rotation."""

import numpy as np
from scipy.spatial.transform import Rotation

# below this angle the left Jacobian uses its Taylor expansion
SMALL_ANGLE = 1e-6


def rotvecs_to_matrices(rotvecs):
    """(N, 3) axis-angle vectors to (N, 3, 3) rotation matrices."""
    rotvecs = np.asarray(rotvecs, dtype=np.float64).reshape(-1, 3)
    return Rotation.from_rotvec(rotvecs).as_matrix().reshape(-1, 3, 3)


def skew(v):
    x, y, z = v
    return np.array([[0.0, -z, y],
                     [z, 0.0, -x],
                     [-y, x, 0.0]])


def skew_many(v):
    """(N, 3) -> (N, 3, 3) cross product matrices."""
    v = np.asarray(v, dtype=np.float64).reshape(-1, 3)
    out = np.zeros((len(v), 3, 3))
    out[:, 0, 1] = -v[:, 2]
    out[:, 0, 2] = v[:, 1]
    out[:, 1, 0] = v[:, 2]
    out[:, 1, 2] = -v[:, 0]
    out[:, 2, 0] = -v[:, 1]
    out[:, 2, 1] = v[:, 0]
    return out


def left_jacobian(rotvec):
    """Left Jacobian of the SO(3) exponential map.

    d exp(w) = [J_l(w) dw]x exp(w)
    """
    rotvec = np.asarray(rotvec, dtype=np.float64)
    theta = np.linalg.norm(rotvec)
    k = skew(rotvec)
    if theta < SMALL_ANGLE:
        return np.eye(3) + 0.5 * k + k @ k / 6.0
    return (np.eye(3)
            + (1 - np.cos(theta)) / theta ** 2 * k
            + (theta - np.sin(theta)) / theta ** 3 * k @ k)


def rotation_about(axis, degrees):
    """Axis-angle vector for a rotation of `degrees` about `axis`."""
    axis = np.asarray(axis, dtype=np.float64)
    return np.deg2rad(degrees) * axis / np.linalg.norm(axis)


def angle_between(rotvec_a, rotvec_b):
    """Geodesic angle in degrees between two rotations."""
    relative = Rotation.from_rotvec(rotvec_a).inv() \
        * Rotation.from_rotvec(rotvec_b)
    return float(np.rad2deg(relative.magnitude()))
