"""Rotation helpers.

Euler triples are ordered ``(roll, pitch, yaw)`` in radians and follow the
intrinsic ZYX convention ``R = Rz(yaw) @ Ry(pitch) @ Rx(roll)``. All functions
accept a single triple/matrix or a stack along leading axes.
"""
import itertools

import numpy as np

from .exceptions import GimbalLock

_GIMBAL_TOL = 1e-9
_SMALL_ANGLE = 1e-7


def euler_to_matrix(euler):
    """Rotation matrix ``Rz(yaw) Ry(pitch) Rx(roll)`` for each Euler triple."""
    e = np.asarray(euler, dtype=float)
    r, p, y = e[..., 0], e[..., 1], e[..., 2]
    cr, sr = np.cos(r), np.sin(r)
    cp, sp = np.cos(p), np.sin(p)
    cy, sy = np.cos(y), np.sin(y)
    R = np.empty(e.shape[:-1] + (3, 3))
    R[..., 0, 0] = cy * cp
    R[..., 0, 1] = cy * sp * sr - sy * cr
    R[..., 0, 2] = cy * sp * cr + sy * sr
    R[..., 1, 0] = sy * cp
    R[..., 1, 1] = sy * sp * sr + cy * cr
    R[..., 1, 2] = sy * sp * cr - cy * sr
    R[..., 2, 0] = -sp
    R[..., 2, 1] = cp * sr
    R[..., 2, 2] = cp * cr
    return R


def matrix_to_euler(R):
    """Inverse of :func:`euler_to_matrix`.

    Raises
    ------
    GimbalLock
        If ``|R[2, 0]| >= 1 - 1e-9`` for any matrix in the stack.
    """
    R = np.asarray(R, dtype=float)
    r20 = R[..., 2, 0]
    if np.any(np.abs(r20) >= 1.0 - _GIMBAL_TOL):
        raise GimbalLock("pitch at +-90 deg, roll and yaw are not separable")
    roll = np.arctan2(R[..., 2, 1], R[..., 2, 2])
    pitch = -np.arcsin(r20)
    yaw = np.arctan2(R[..., 1, 0], R[..., 0, 0])
    return np.stack([roll, pitch, yaw], axis=-1)


def hat(w):
    """Skew-symmetric matrix with ``hat(w) @ v == cross(w, v)``."""
    w = np.asarray(w, dtype=float)
    S = np.zeros(w.shape[:-1] + (3, 3))
    S[..., 0, 1] = -w[..., 2]
    S[..., 0, 2] = w[..., 1]
    S[..., 1, 0] = w[..., 2]
    S[..., 1, 2] = -w[..., 0]
    S[..., 2, 0] = -w[..., 1]
    S[..., 2, 1] = w[..., 0]
    return S


def so3_exp(phi):
    """Rodrigues formula: rotation matrix for axis-angle vector ``phi``."""
    phi = np.asarray(phi, dtype=float)
    theta = np.linalg.norm(phi, axis=-1)[..., None, None]
    K = hat(phi)
    K2 = K @ K
    small = theta < _SMALL_ANGLE
    safe = np.where(small, 1.0, theta)
    a = np.where(small, 1.0 - theta**2 / 6.0, np.sin(safe) / safe)
    b = np.where(small, 0.5 - theta**2 / 24.0, (1.0 - np.cos(safe)) / safe**2)
    return np.eye(3) + a * K + b * K2


def so3_log(R):
    """Axis-angle vector of a rotation matrix (norm in ``[0, pi]``)."""
    R = np.asarray(R, dtype=float)
    if R.ndim > 2:
        flat = R.reshape(-1, 3, 3)
        return np.stack([so3_log(m) for m in flat]).reshape(R.shape[:-2] + (3,))
    vee = 0.5 * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])
    cos_t = np.clip(0.5 * (np.trace(R) - 1.0), -1.0, 1.0)
    sin_t = np.linalg.norm(vee)
    theta = np.arctan2(sin_t, cos_t)
    if theta < _SMALL_ANGLE:
        # vee = sin(t) * axis; first-order correction keeps |log| == t
        return vee * (1.0 + theta**2 / 6.0)
    if cos_t > -0.9:
        return vee * (theta / sin_t)
    # near pi: sym(R) - cos(t) I = (1 - cos(t)) a a^T, take its dominant column
    B = 0.5 * (R + R.T) - cos_t * np.eye(3)
    k = int(np.argmax(np.diag(B)))
    axis = B[:, k] / np.linalg.norm(B[:, k])
    if np.dot(axis, vee) < 0:
        axis = -axis
    # refine the angle with both trace and antisymmetric part
    return axis * np.arctan2(np.dot(axis, vee), cos_t)


def geodesic_angle(R_a, R_b):
    """Rotation angle of ``R_a^T R_b`` in radians."""
    R_a = np.asarray(R_a, dtype=float)
    R_b = np.asarray(R_b, dtype=float)
    rel = np.swapaxes(R_a, -1, -2) @ R_b
    return np.linalg.norm(so3_log(rel), axis=-1)


def sample_alignment(range_deg, rng):
    """Draw ``(roll, pitch, yaw)`` uniformly in ``[0, range_deg]`` degrees, return radians."""
    if range_deg < 0:
        raise ValueError("range_deg must be non-negative")
    return np.deg2rad(rng.uniform(0.0, range_deg, size=3))


def grid_alignments(levels_per_axis, range_deg):
    """Lexicographic Cartesian grid of alignments (radians), ``levels**3`` rows."""
    if levels_per_axis < 1:
        raise ValueError("levels_per_axis must be >= 1")
    if levels_per_axis == 1:
        axis = np.zeros(1)
    else:
        axis = np.linspace(0.0, range_deg, levels_per_axis)
    grid = np.array(list(itertools.product(axis, axis, axis)), dtype=float)
    return np.deg2rad(grid)
