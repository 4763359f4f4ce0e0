"""Noising pipeline: ground truth -> corrupted DVL and mechanized INS velocities.

The alignment only enters the DVL path. Each alignment gets its own DVL noise;
INS runs are either shared by all alignments of a call or drawn per alignment.
"""
from dataclasses import dataclass

import numpy as np

from . import so3
from .dvl import beam_matrix, dvl_corrupt, dvl_forward, dvl_solve
from .imu import simulate_ins
from .sampling import epoch_indices, nearest_indices
from .trajgen import body_velocity_gt


@dataclass
class PairedStreams:
    """DVL epochs paired with the nearest INS epoch.

    ``v_d`` and ``v_b`` are ``(M, n, 3)`` for ``M`` alignments; ``labels`` are
    ``(M, 3)`` Euler angles in radians.
    """

    t: np.ndarray
    v_d: np.ndarray
    v_b: np.ndarray
    labels: np.ndarray
    t_ins: np.ndarray


def dvl_epochs(traj, dvl_spec, duration_s=None):
    idx = epoch_indices(traj.t, dvl_spec.rate_hz)
    if duration_s is not None:
        idx = idx[traj.t[idx] <= traj.t[0] + duration_s + 1e-9]
    return idx


def simulate_dvl_batch(traj, labels, dvl_spec, rng, duration_s=None):
    """Solved DVL velocities ``(M, n, 3)`` for every alignment in ``labels``."""
    idx = dvl_epochs(traj, dvl_spec, duration_s)
    R = so3.euler_to_matrix(np.atleast_2d(labels))
    v_d_true = np.einsum("nj,mji->mni", body_velocity_gt(traj)[idx], R)
    H = beam_matrix(dvl_spec.beam_pitch_alpha)
    beams = dvl_corrupt(dvl_forward(v_d_true, H), dvl_spec, rng)
    v_d = dvl_solve(beams.reshape(-1, 4), H).reshape(v_d_true.shape)
    return traj.t[idx].copy(), v_d


def simulate_streams(traj, labels, dvl_spec, imu_spec, rng, duration_s=None,
                     shared_ins=True):
    """Simulate paired DVL/INS velocity streams for a stack of alignments."""
    labels = np.atleast_2d(np.asarray(labels, dtype=float))
    t_dvl, v_d = simulate_dvl_batch(traj, labels, dvl_spec, rng, duration_s)
    ins_idx = epoch_indices(traj.t, imu_spec.rate_hz)
    t_ins_all = traj.t[ins_idx]
    pair = nearest_indices(t_ins_all, t_dvl)
    n_ins = pair[-1] + 1
    keep = np.unique(pair)
    n_runs = 1 if shared_ins else len(labels)
    t_keep, v_b = simulate_ins(traj, imu_spec, rng, n_runs, n_samples=n_ins,
                               keep=keep)
    slot = np.searchsorted(keep, pair)
    v_b = v_b[:, slot]
    if shared_ins:
        v_b = np.broadcast_to(v_b, v_d.shape)
    return PairedStreams(t=t_dvl, v_d=v_d, v_b=v_b, labels=labels,
                         t_ins=t_keep[slot])
