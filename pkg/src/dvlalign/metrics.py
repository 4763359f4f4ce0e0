"""Alignment error metrics (degrees).

``rmse`` divides the summed squared roll/pitch/yaw errors by the number of
samples only, not by ``3 * N``; it is therefore sqrt(3) larger than a per-angle
RMSE for isotropic errors.
"""
import json
from dataclasses import dataclass, asdict, fields

import numpy as np

from . import so3
from .exceptions import LengthMismatch


def _paired(a, b, tail):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == len(tail):
        a, b = a[None], b[None]
    if a.shape != b.shape:
        raise LengthMismatch(f"shapes differ: {a.shape} vs {b.shape}")
    if a.shape[1:] != tail:
        raise ValueError(f"expected trailing shape {tail}, got {a.shape[1:]}")
    if len(a) == 0:
        raise ValueError("need at least one sample")
    return a, b


def rmse(labels, preds):
    """``sqrt(sum_i sum_j (a_ij - a^_ij)^2 / N)`` over (N, 3) Euler angles [deg]."""
    a, b = _paired(labels, preds, (3,))
    return float(np.sqrt(np.sum((a - b) ** 2) / len(a)))


def geodesic_errors(labels, preds):
    """Per-sample rotation angle of ``R^T R_hat`` in degrees, (N, 3, 3) inputs."""
    a, b = _paired(labels, preds, (3, 3))
    return np.rad2deg(so3.geodesic_angle(a, b))


def aoe(labels, preds):
    """Root mean square geodesic error [deg] between rotation matrices."""
    return float(np.sqrt(np.mean(geodesic_errors(labels, preds) ** 2)))


def max_geodesic_error(labels, preds):
    return float(np.max(geodesic_errors(labels, preds)))


def euler_deg_to_matrix(euler_deg):
    return so3.euler_to_matrix(np.deg2rad(np.asarray(euler_deg, dtype=float)))


@dataclass
class EvalReport:
    rmse_deg: float
    aoe_deg: float
    max_err_deg: float
    n_samples: int
    window_s: float
    method: str
    rmse_std: float = 0.0
    aoe_std: float = 0.0

    @classmethod
    def from_euler(cls, labels_deg, preds_deg, window_s, method, trial_ids=None):
        """Evaluate (N, 3) degree triples; ``trial_ids`` groups samples for the std."""
        labels_deg = np.asarray(labels_deg, dtype=float)
        preds_deg = np.asarray(preds_deg, dtype=float)
        R, R_hat = euler_deg_to_matrix(labels_deg), euler_deg_to_matrix(preds_deg)
        report = cls(rmse(labels_deg, preds_deg), aoe(R, R_hat),
                     max_geodesic_error(R, R_hat), len(labels_deg),
                     float(window_s), method)
        if trial_ids is not None:
            ids = np.asarray(trial_ids)
            groups = [ids == u for u in np.unique(ids)]
            if len(groups) > 1:
                report.rmse_std = float(np.std(
                    [rmse(labels_deg[g], preds_deg[g]) for g in groups], ddof=1))
                report.aoe_std = float(np.std(
                    [aoe(R[g], R_hat[g]) for g in groups], ddof=1))
        return report

    @staticmethod
    def csv_header():
        return ",".join(f.name for f in fields(EvalReport))

    def to_csv_row(self):
        vals = []
        for f in fields(self):
            v = getattr(self, f.name)
            vals.append(f"{v:.6f}" if isinstance(v, float) else str(v))
        return ",".join(vals)

    def to_json(self):
        return json.dumps(asdict(self), sort_keys=True)
