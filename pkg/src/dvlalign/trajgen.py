"""Ground-truth trajectories with exact kinematics and ideal inertial readings.

Trajectories are level (zero roll and pitch). The vehicle yaws at a constant
rate and moves with body-frame velocity ``(speed, sway(t), heave(t))``, where the
optional sway/heave terms are sinusoids. A pure coordinated turn has a constant
body velocity, which leaves the rotation about the body x-axis unobservable to a
velocity-matching estimator; the oscillations stand in for the small transverse
motion a real vehicle exhibits.

Frames: navigation frame is NED, gravity ``g_n = (0, 0, +G)``.
"""
from dataclasses import dataclass

import numpy as np

from . import so3

G = 9.80665

# Turn preset: half circle over 200 s at 2 m/s.
TURN_RATE = np.pi / 200.0
SWAY_AMPLITUDE = 0.12
SWAY_PERIOD = 30.0
HEAVE_AMPLITUDE = 0.15
HEAVE_PERIOD = 12.0


@dataclass
class Trajectory:
    """Uniformly sampled kinematic ground truth (struct of arrays).

    Attributes
    ----------
    t : (N,) seconds
    p_n, v_n : (N, 3) NED position [m] and velocity [m/s]
    R_nb : (N, 3, 3) body-to-nav rotation
    f_b : (N, 3) ideal specific force [m/s^2], body frame
    w_b : (N, 3) ideal angular rate [rad/s], body frame
    rate_hz : sample rate
    """

    t: np.ndarray
    p_n: np.ndarray
    v_n: np.ndarray
    R_nb: np.ndarray
    f_b: np.ndarray
    w_b: np.ndarray
    rate_hz: float

    def __len__(self):
        return len(self.t)

    @property
    def duration(self):
        return float(self.t[-1] - self.t[0])

    @property
    def euler(self):
        """(N, 3) roll, pitch, yaw in radians."""
        return so3.matrix_to_euler(self.R_nb)


def _time_axis(duration_s, rate_hz):
    if duration_s <= 0 or rate_hz <= 0:
        raise ValueError("duration_s and rate_hz must be positive")
    n = int(round(duration_s * rate_hz)) + 1
    return np.arange(n) / rate_hz


def _cumtrapz(y, dt):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * dt, axis=0)
    return out


def gen_level(duration_s, speed_mps, yaw_rate_rad_s, rate_hz, heading_rad=0.0,
              sway_amp=0.0, sway_period=SWAY_PERIOD,
              heave_amp=0.0, heave_period=HEAVE_PERIOD):
    """Level trajectory with constant yaw rate and optional transverse oscillation."""
    if speed_mps < 0:
        raise ValueError("speed_mps must be >= 0")
    t = _time_axis(duration_s, rate_hz)
    n = len(t)
    wz = float(yaw_rate_rad_s)
    psi = heading_rad + wz * t
    R_nb = so3.euler_to_matrix(np.column_stack([np.zeros(n), np.zeros(n), psi]))

    ws = 2.0 * np.pi / sway_period
    wh = 2.0 * np.pi / heave_period
    v_b = np.column_stack([
        np.full(n, float(speed_mps)),
        sway_amp * np.sin(ws * t),
        heave_amp * np.sin(wh * t),
    ])
    dv_b = np.column_stack([
        np.zeros(n),
        sway_amp * ws * np.cos(ws * t),
        heave_amp * wh * np.cos(wh * t),
    ])
    w_b = np.zeros((n, 3))
    w_b[:, 2] = wz

    v_n = np.einsum("nij,nj->ni", R_nb, v_b)
    # body-frame kinematic acceleration of a level, yawing vehicle
    a_b = dv_b + np.cross(w_b, v_b)
    f_b = a_b - np.array([0.0, 0.0, G])

    c0, s0 = np.cos(heading_rad), np.sin(heading_rad)
    p_n = np.zeros((n, 3))
    if abs(wz) < 1e-12:
        p_n[:, 0] = speed_mps * c0 * t
        p_n[:, 1] = speed_mps * s0 * t
    else:
        r = speed_mps / wz
        p_n[:, 0] = r * (np.sin(psi) - s0)
        p_n[:, 1] = r * (c0 - np.cos(psi))
    if sway_amp or heave_amp:
        extra = v_n - np.column_stack([speed_mps * np.cos(psi),
                                       speed_mps * np.sin(psi), np.zeros(n)])
        p_n += _cumtrapz(extra, 1.0 / rate_hz)

    return Trajectory(t=t, p_n=p_n, v_n=v_n, R_nb=R_nb, f_b=f_b, w_b=w_b,
                      rate_hz=float(rate_hz))


def gen_straight(duration_s, speed_mps, heading_rad, rate_hz):
    """Constant-velocity level straight line."""
    return gen_level(duration_s, speed_mps, 0.0, rate_hz, heading_rad=heading_rad)


def gen_turn(duration_s, speed_mps, yaw_rate_rad_s, rate_hz, **oscillation):
    """Level constant-rate turn; pass ``sway_amp``/``heave_amp`` for transverse motion."""
    if speed_mps <= 0:
        raise ValueError("speed_mps must be positive for a turn")
    if yaw_rate_rad_s == 0:
        raise ValueError("yaw_rate_rad_s must be nonzero")
    return gen_level(duration_s, speed_mps, yaw_rate_rad_s, rate_hz, **oscillation)


def preset(name, duration_s=200.0, speed_mps=2.0, rate_hz=100.0):
    """Named trajectories used by the experiments.

    ``turn``
        right turn at ``TURN_RATE`` with sway/heave oscillation (default).
    ``turn-pure``
        the same turn without oscillation (constant body velocity).
    ``straight``
        straight line heading north with the same oscillation.
    ``straight-pure``
        constant-velocity straight line.
    """
    osc = dict(sway_amp=SWAY_AMPLITUDE, sway_period=SWAY_PERIOD,
               heave_amp=HEAVE_AMPLITUDE, heave_period=HEAVE_PERIOD)
    if name == "turn":
        return gen_turn(duration_s, speed_mps, TURN_RATE, rate_hz, **osc)
    if name == "turn-pure":
        return gen_turn(duration_s, speed_mps, TURN_RATE, rate_hz)
    if name == "straight":
        return gen_level(duration_s, speed_mps, 0.0, rate_hz, **osc)
    if name == "straight-pure":
        return gen_straight(duration_s, speed_mps, 0.0, rate_hz)
    raise ValueError(f"unknown trajectory preset {name!r}")


PRESETS = ("turn", "turn-pure", "straight", "straight-pure")


def body_velocity_gt(traj):
    """(N, 3) body-frame velocity ``R_nb^T v_n``."""
    return np.einsum("nji,nj->ni", traj.R_nb, traj.v_n)


def to_csv(traj, path):
    """Write t, p_n, v_n, euler [deg], f_b, w_b with one header row."""
    cols = ["t", "pn_n", "pn_e", "pn_d", "vn_n", "vn_e", "vn_d",
            "roll_deg", "pitch_deg", "yaw_deg",
            "fb_x", "fb_y", "fb_z", "wb_x", "wb_y", "wb_z"]
    data = np.column_stack([traj.t, traj.p_n, traj.v_n, np.rad2deg(traj.euler),
                            traj.f_b, traj.w_b])
    np.savetxt(path, data, delimiter=",", header=",".join(cols), comments="",
               fmt="%.10g")
