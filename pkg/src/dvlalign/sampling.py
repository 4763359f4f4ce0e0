"""Timestamp helpers shared by the sensor simulators."""
import numpy as np


def nearest_indices(t_src, t_query):
    """Index into sorted ``t_src`` of the sample nearest each ``t_query`` (ties go left)."""
    t_src = np.asarray(t_src, dtype=float)
    t_query = np.asarray(t_query, dtype=float)
    if len(t_src) == 1:
        return np.zeros(len(t_query), dtype=int)
    idx = np.clip(np.searchsorted(t_src, t_query), 1, len(t_src) - 1)
    idx -= (t_query - t_src[idx - 1]) <= (t_src[idx] - t_query)
    return idx


def epoch_indices(t, rate_hz):
    """Samples of the uniform series ``t`` nearest to a grid at ``rate_hz``."""
    t = np.asarray(t, dtype=float)
    if len(t) > 1 and rate_hz > (1.0 / (t[1] - t[0])) * (1 + 1e-9):
        raise ValueError("output rate exceeds source rate")
    n = int(np.floor((t[-1] - t[0]) * rate_hz + 1e-9)) + 1
    return nearest_indices(t, t[0] + np.arange(n) / rate_hz)
