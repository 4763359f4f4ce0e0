"""SVD solution of the velocity-matching Wahba problem.

Finds ``R`` in SO(3) minimizing ``mean ||v_b[i] - R v_d[i]||^2``. No centroid is
removed: the fit is a pure rotation, so a DVL bias is not absorbed.
"""
from typing import NamedTuple

import numpy as np

from . import so3
from .exceptions import DegenerateWindow
from .pipeline import simulate_streams

_DEGENERATE_RATIO = 1e-12


class AlignmentEstimate(NamedTuple):
    R_hat: np.ndarray
    residual_cost: float


def wahba_cost(R, v_b, v_d):
    """Mean squared residual of ``v_b - R v_d``."""
    resid = np.asarray(v_b) - np.asarray(v_d) @ np.asarray(R).T
    return float(np.mean(np.sum(resid**2, axis=-1)))


def _rotation_from_cross_covariance(B):
    U, s, Vt = np.linalg.svd(B)
    d = np.sign(np.linalg.det(U @ Vt))
    d = np.where(d == 0, 1.0, d)
    D = np.ones(B.shape[:-2] + (3,))
    D[..., 2] = d
    return (U * D[..., None, :]) @ Vt, s


def svd_align(v_b, v_d):
    """Estimate ``R`` with ``v_b ~ R v_d`` from paired (N, 3) velocity rows.

    Raises
    ------
    DegenerateWindow
        When the two smallest singular values of the cross-covariance both fall
        below ``1e-12`` times the largest, i.e. the data are (close to) rank one.
    """
    v_b = np.asarray(v_b, dtype=float)
    v_d = np.asarray(v_d, dtype=float)
    if v_b.shape != v_d.shape or v_b.ndim != 2 or v_b.shape[1] != 3:
        raise ValueError("v_b and v_d must both be (N, 3)")
    if len(v_b) < 2:
        raise DegenerateWindow("need at least two velocity pairs")
    B = v_b.T @ v_d
    R, s = _rotation_from_cross_covariance(B)
    if s[0] == 0 or s[1] < _DEGENERATE_RATIO * s[0]:
        raise DegenerateWindow("rotation about the velocity direction is unobservable")
    return AlignmentEstimate(R, wahba_cost(R, v_b, v_d))


def svd_align_batch(v_b, v_d):
    """Vectorized :func:`svd_align` over a leading batch axis, no degeneracy check.

    Returns ``(R_hat, singular_values)`` of shapes ``(K, 3, 3)`` and ``(K, 3)``.
    """
    B = np.einsum("kni,knj->kij", np.asarray(v_b, dtype=float),
                  np.asarray(v_d, dtype=float))
    return _rotation_from_cross_covariance(B)


def window_length(window_s, rate_hz):
    """Number of epochs in a window of ``window_s`` seconds (25 s at 5 Hz -> 125)."""
    return max(int(round(window_s * rate_hz)), 1)


def svd_align_trajectory(traj, alignment_gt, dvl_spec, imu_spec, window_s, rng):
    """Simulate both sensors along ``traj`` and run :func:`svd_align` on the first window.

    ``alignment_gt`` is an Euler triple in radians. Returns the estimate and a
    dict with ``euler_err_deg`` (3,), ``geodesic_err_deg`` and ``euler_hat``
    (radians).
    """
    if window_s > traj.duration + 1e-9:
        raise ValueError("window_s exceeds trajectory duration")
    streams = simulate_streams(traj, alignment_gt, dvl_spec, imu_spec, rng,
                               duration_s=window_s)
    n = window_length(window_s, dvl_spec.rate_hz)
    est = svd_align(streams.v_b[0, :n], streams.v_d[0, :n])
    R_gt = so3.euler_to_matrix(np.asarray(alignment_gt, dtype=float))
    euler_hat = so3.matrix_to_euler(est.R_hat)
    errors = {
        "euler_hat": euler_hat,
        "euler_err_deg": np.rad2deg(euler_hat - np.asarray(alignment_gt)),
        "geodesic_err_deg": float(np.rad2deg(so3.geodesic_angle(R_gt, est.R_hat))),
    }
    return est, errors
