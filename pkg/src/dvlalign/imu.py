"""IMU error model and simplified strapdown mechanization.

Earth rate and transport rate are neglected, so the navigation equations reduce
to ``dv_n/dt = R_nb f_b + g_n`` and ``dR_nb/dt = R_nb hat(w_b)``.
"""
from dataclasses import dataclass, asdict

import numpy as np

from . import so3
from .sampling import epoch_indices
from .trajgen import G, body_velocity_gt

MG = G / 1000.0                       # m/s^2 per milli-g
DEG_PER_HOUR = np.pi / 180.0 / 3600.0  # rad/s per deg/h
DEG_PER_SQRT_HOUR = np.pi / 180.0 / 60.0  # rad/sqrt(s) per deg/sqrt(h)


@dataclass
class ImuSpec:
    """IMU errors in datasheet units.

    accel_bias [mg], gyro_bias [deg/h], accel_noise_density [mg/sqrt(Hz)],
    gyro_noise_density [deg/sqrt(h)]. ``bias_sign`` is ``"random"`` (per-axis
    sign drawn once per run) or ``"positive"``.
    """

    rate_hz: float = 100.0
    accel_bias: float = 0.0
    gyro_bias: float = 0.0
    accel_noise_density: float = 0.0
    gyro_noise_density: float = 0.0
    bias_sign: str = "random"

    def __post_init__(self):
        if self.rate_hz <= 0:
            raise ValueError("rate_hz must be positive")
        for name in ("accel_bias", "gyro_bias", "accel_noise_density",
                     "gyro_noise_density"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if self.bias_sign not in ("random", "positive"):
            raise ValueError("bias_sign must be 'random' or 'positive'")

    @property
    def accel_sigma(self):
        """Discrete accelerometer noise std per sample [m/s^2]."""
        return self.accel_noise_density * MG * np.sqrt(self.rate_hz)

    @property
    def gyro_sigma(self):
        """Discrete gyro noise std per sample [rad/s]."""
        return self.gyro_noise_density * DEG_PER_SQRT_HOUR * np.sqrt(self.rate_hz)

    def to_dict(self):
        return asdict(self)


IMU_GRADES = {
    "ideal": ImuSpec(),
    "navigation": ImuSpec(accel_bias=0.1, gyro_bias=1.0,
                          accel_noise_density=0.001, gyro_noise_density=0.01),
    "tactical": ImuSpec(accel_bias=1.0, gyro_bias=10.0,
                        accel_noise_density=0.01, gyro_noise_density=0.1),
}


def imu_grade(name, **overrides):
    spec = asdict(IMU_GRADES[name])
    spec.update(overrides)
    return ImuSpec(**spec)


@dataclass
class ImuSeries:
    t: np.ndarray
    f_b: np.ndarray
    w_b: np.ndarray

    def __len__(self):
        return len(self.t)


@dataclass
class InsVelocitySeries:
    t: np.ndarray
    v_b: np.ndarray

    def __len__(self):
        return len(self.t)


def _bias_vectors(spec, rng, n_runs):
    if spec.bias_sign == "positive":
        signs = np.ones((n_runs, 2, 3))
    else:
        signs = rng.choice([-1.0, 1.0], size=(n_runs, 2, 3))
    b_a = spec.accel_bias * MG * signs[:, 0]
    b_g = spec.gyro_bias * DEG_PER_HOUR * signs[:, 1]
    return b_a, b_g


def imu_corrupt_batch(traj, spec, rng, n_runs, n_samples=None):
    """Independent corrupted copies of the ideal readings.

    Returns ``(t, f, w)`` with ``f, w`` of shape ``(n_runs, n, 3)``.
    """
    idx = epoch_indices(traj.t, spec.rate_hz)
    if n_samples is not None:
        idx = idx[:n_samples]
    n = len(idx)
    b_a, b_g = _bias_vectors(spec, rng, n_runs)
    f = np.broadcast_to(traj.f_b[idx], (n_runs, n, 3)) + b_a[:, None, :]
    w = np.broadcast_to(traj.w_b[idx], (n_runs, n, 3)) + b_g[:, None, :]
    if spec.accel_sigma > 0:
        f = f + spec.accel_sigma * rng.standard_normal((n_runs, n, 3))
    if spec.gyro_sigma > 0:
        w = w + spec.gyro_sigma * rng.standard_normal((n_runs, n, 3))
    return traj.t[idx].copy(), np.ascontiguousarray(f), np.ascontiguousarray(w)


def imu_corrupt(traj, spec, rng):
    """Corrupted IMU readings ``f~ = f + b_a + n_a``, ``w~ = w + b_g + n_g``."""
    t, f, w = imu_corrupt_batch(traj, spec, rng, 1)
    return ImuSeries(t=t, f_b=f[0], w_b=w[0])


def mechanize_batch(f_b, w_b, dt, init_v_n, init_R_nb, keep=None):
    """Integrate stacked IMU runs into body-frame velocity.

    Attitude uses the exponential map per step. Velocity uses the trapezoid rule
    on the nav-frame specific force; a rectangle rule lags by half a step, which
    on the oscillating turn is ~0.1 deg of alignment error by itself.
    Returns ``(K, N, 3)``, or ``(K, len(keep), 3)`` when only the epochs in the
    sorted index array ``keep`` are wanted.
    """
    f_b = np.asarray(f_b, dtype=float)
    w_b = np.asarray(w_b, dtype=float)
    K, N, _ = f_b.shape
    keep = np.arange(N) if keep is None else np.asarray(keep)
    slot = np.full(N, -1)
    slot[keep] = np.arange(len(keep))
    last = int(keep[-1]) if len(keep) else -1
    g_n = np.array([0.0, 0.0, G])
    R = np.broadcast_to(np.asarray(init_R_nb, dtype=float), (K, 3, 3)).copy()
    v = np.broadcast_to(np.asarray(init_v_n, dtype=float), (K, 3)).copy()
    out = np.empty((K, len(keep), 3))
    a_n = np.einsum("kij,kj->ki", R, f_b[:, 0])
    for k in range(last + 1):
        if slot[k] >= 0:
            out[:, slot[k]] = np.einsum("kji,kj->ki", R, v)
        if k == last:
            break
        R = R @ so3.so3_exp(w_b[:, k] * dt)
        a_next = np.einsum("kij,kj->ki", R, f_b[:, k + 1])
        v += (0.5 * (a_n + a_next) + g_n) * dt
        a_n = a_next
    return out


def mechanize(imu, init_v_n, init_R_nb):
    """Mechanize one IMU series into an :class:`InsVelocitySeries`."""
    dt = float(imu.t[1] - imu.t[0])
    v_b = mechanize_batch(imu.f_b[None], imu.w_b[None], dt, init_v_n, init_R_nb)
    return InsVelocitySeries(t=imu.t.copy(), v_b=v_b[0])


def attitude_history(imu, init_R_nb):
    """Mechanized attitude at every epoch, for diagnostics."""
    dt = float(imu.t[1] - imu.t[0])
    dR = so3.so3_exp(imu.w_b * dt)
    R = np.empty((len(imu), 3, 3))
    R[0] = init_R_nb
    for k in range(1, len(imu)):
        R[k] = R[k - 1] @ dR[k - 1]
    return R


def simulate_ins(traj, spec, rng, n_runs=1, n_samples=None, keep=None, chunk=256):
    """Corrupt and mechanize ``n_runs`` INS solutions from true initial conditions.

    Returns ``(t, v_b)`` with ``v_b`` of shape ``(n_runs, n, 3)``; with ``keep``
    only those IMU epochs are returned.
    """
    dt = 1.0 / spec.rate_hz
    parts = []
    t = None
    for start in range(0, n_runs, chunk):
        k = min(chunk, n_runs - start)
        t, f, w = imu_corrupt_batch(traj, spec, rng, k, n_samples)
        parts.append(mechanize_batch(f, w, dt, traj.v_n[0], traj.R_nb[0], keep))
    if keep is not None:
        t = t[np.asarray(keep)]
    return t, np.concatenate(parts)


def velocity_error_growth(spec, traj, n_trials, rng):
    """Monte-Carlo RMS of the body-velocity error norm over time.

    Returns ``(t, rms)``.
    """
    if n_trials < 1:
        raise ValueError("n_trials must be >= 1")
    t, v_b = simulate_ins(traj, spec, rng, n_trials)
    idx = epoch_indices(traj.t, spec.rate_hz)
    err = np.linalg.norm(v_b - body_velocity_gt(traj)[idx], axis=-1)
    return t, np.sqrt(np.mean(err**2, axis=0))


def to_csv(series, path):
    np.savetxt(path, np.column_stack([series.t, series.v_b]), delimiter=",",
               header="t,vx,vy,vz", comments="", fmt="%.10g")
