"""Janus DVL forward model, beam corruption and least-squares velocity solve."""
from dataclasses import dataclass, asdict

import numpy as np

from .exceptions import SingularGeometry
from .sampling import epoch_indices
from .trajgen import body_velocity_gt

_COND_LIMIT = 1e12


@dataclass
class DvlSpec:
    """DVL error parameters. ``bias`` and ``scale_factor`` may be scalars or 4-vectors."""

    rate_hz: float = 5.0
    noise_sigma: float = 0.008
    bias: object = 0.001
    scale_factor: object = 0.005
    beam_pitch_alpha: float = np.deg2rad(20.0)

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        if self.noise_sigma < 0:
            raise ValueError("noise_sigma must be >= 0")
        if np.any(np.abs(self.scale_factor) >= 1):
            raise ValueError("|scale_factor| must be < 1")

    @classmethod
    def ideal(cls, rate_hz=5.0, beam_pitch_alpha=np.deg2rad(20.0)):
        return cls(rate_hz, 0.0, 0.0, 0.0, beam_pitch_alpha)

    def to_dict(self):
        d = asdict(self)
        for k in ("bias", "scale_factor"):
            d[k] = np.asarray(d[k]).tolist()
        return d


@dataclass
class DvlSeries:
    t: np.ndarray
    v_d: np.ndarray

    def __len__(self):
        return len(self.t)


def beam_yaws():
    """Yaw of the four Janus beams: 45, 135, 225, 315 degrees."""
    return np.arange(4) * np.pi / 2 + np.pi / 4


def beam_matrix(alpha):
    """(4, 3) matrix of unit beam directions for beam pitch ``alpha`` from vertical."""
    if not 0 < alpha < np.pi / 2:
        raise ValueError("alpha must lie in (0, pi/2)")
    psi = beam_yaws()
    return np.column_stack([np.cos(psi) * np.sin(alpha),
                            np.sin(psi) * np.sin(alpha),
                            np.full(4, np.cos(alpha))])


def dvl_forward(v_d, H):
    """Beam velocities ``H @ v_d``; ``v_d`` may be (3,) or (N, 3)."""
    return np.asarray(v_d, dtype=float) @ np.asarray(H).T


def dvl_corrupt(beams, spec, rng):
    """Apply scale factor, bias and white noise to each beam."""
    beams = np.asarray(beams, dtype=float)
    out = beams * (1.0 + np.asarray(spec.scale_factor)) + np.asarray(spec.bias)
    if spec.noise_sigma > 0:
        out = out + spec.noise_sigma * rng.standard_normal(beams.shape)
    return out


def dvl_solve(beams, H):
    """Least-squares DVL-frame velocity ``(H^T H)^-1 H^T beams``."""
    H = np.asarray(H, dtype=float)
    HtH = H.T @ H
    if np.linalg.cond(HtH) > _COND_LIMIT:
        raise SingularGeometry("beam geometry is rank deficient")
    # solve the normal equations; beams may be (4,) or (N, 4)
    return np.linalg.solve(HtH, H.T @ np.asarray(beams, dtype=float).T).T


def simulate_dvl(traj, alignment, spec, rng):
    """Simulate solved DVL-frame velocities along a trajectory.

    ``alignment`` is the rotation ``R`` with ``v_b = R @ v_d`` (the matrix of the
    label Euler angles), so the DVL sees ``v_d = R^T v_b``.
    """
    idx = epoch_indices(traj.t, spec.rate_hz)
    v_b = body_velocity_gt(traj)[idx]
    v_d_true = v_b @ np.asarray(alignment)
    H = beam_matrix(spec.beam_pitch_alpha)
    beams = dvl_corrupt(dvl_forward(v_d_true, H), spec, rng)
    return DvlSeries(t=traj.t[idx].copy(), v_d=dvl_solve(beams, H))


def to_csv(series, path):
    np.savetxt(path, np.column_stack([series.t, series.v_d]), delimiter=",",
               header="t,vx,vy,vz", comments="", fmt="%.10g")
