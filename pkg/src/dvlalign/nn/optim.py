"""Adam with bias-corrected moments."""
from dataclasses import dataclass

import numpy as np


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    step: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n, lr=1e-3, **kw):
        return cls(np.zeros(n), np.zeros(n), 0, lr, **kw)


def adam_step(state, params, grads):
    """Update ``params`` in place and advance ``state``; returns ``params``."""
    if params.shape != grads.shape or params.shape != state.m.shape:
        raise ValueError("params, grads and moments must share a shape")
    state.step += 1
    state.m *= state.beta1
    state.m += (1 - state.beta1) * grads
    state.v *= state.beta2
    state.v += (1 - state.beta2) * grads**2
    m_hat = state.m / (1 - state.beta1**state.step)
    v_hat = state.v / (1 - state.beta2**state.step)
    params -= state.lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return params
