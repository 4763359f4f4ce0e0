"""Forward/backward primitives for 1-D convolutional networks.

Activations are channels-last, ``(batch, length, channels)``. Convolution is
cross-correlation, ``y[n, j] = sum_i sum_k x[n * stride + k, i] w[j, i, k] + b[j]``
on the zero-padded input, evaluated with an im2col matrix product.
"""
import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import ShapeMismatch

BN_EPS = 1e-5
BN_MOMENTUM = 0.1


def conv_out_len(L, kernel, stride, padding):
    return (L + 2 * padding - kernel) // stride + 1


def conv1d(x, w, b, stride=1, padding=0):
    """Batched convolution; returns ``(y, cache)``.

    x : (B, L, C_in); w : (C_out, C_in, K); b : (C_out,) or None.
    """
    B, L, C = x.shape
    C_out, C_in, K = w.shape
    if C != C_in:
        raise ShapeMismatch(f"input has {C} channels, kernel expects {C_in}")
    L_out = conv_out_len(L, K, stride, padding)
    if L_out < 1:
        raise ShapeMismatch(f"length {L} too short for kernel {K} with padding {padding}")
    xp = np.pad(x, ((0, 0), (padding, padding), (0, 0))) if padding else x
    win = sliding_window_view(xp, K, axis=1)[:, ::stride][:, :L_out]  # (B, L', C, K)
    cols = win.reshape(B * L_out, C * K)
    y = cols @ w.reshape(C_out, C * K).T
    if b is not None:
        y += b
    return y.reshape(B, L_out, C_out), (cols, xp.shape, w.shape, stride, padding)


def conv1d_backward(dy, w, cache):
    """Gradients ``(dx, dw, db)`` of :func:`conv1d`."""
    cols, xp_shape, w_shape, stride, padding = cache
    B, L_out, C_out = dy.shape
    _, C, K = w_shape
    dy2 = dy.reshape(B * L_out, C_out)
    dw = (dy2.T @ cols).reshape(w_shape)
    db = dy2.sum(axis=0)
    dcols = (dy2 @ w.reshape(C_out, C * K)).reshape(B, L_out, C, K)
    dxp = np.zeros(xp_shape)
    span = stride * (L_out - 1) + 1
    for k in range(K):
        dxp[:, k:k + span:stride, :] += dcols[..., k]
    dx = dxp[:, padding:xp_shape[1] - padding, :] if padding else dxp
    return dx, dw, db


def conv1d_forward(x, weights, bias, stride=1, padding=0):
    """Single-example convolution on a ``(C_in, L)`` array, returns ``(C_out, L')``."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 2:
        raise ShapeMismatch("expected a (C_in, L) array")
    w = np.asarray(weights, dtype=float)
    b = None if bias is None else np.asarray(bias, dtype=float)
    y, _ = conv1d(x.T[None], w, b, stride, padding)
    return y[0].T


def batchnorm(x, gamma, beta, running_mean, running_var, train):
    """Per-channel normalization over batch and length axes.

    In training mode the running statistics are updated in place.
    """
    if train:
        mu = x.mean(axis=(0, 1))
        var = x.var(axis=(0, 1))
        m = x.shape[0] * x.shape[1]
        running_mean *= 1 - BN_MOMENTUM
        running_mean += BN_MOMENTUM * mu
        running_var *= 1 - BN_MOMENTUM
        running_var += BN_MOMENTUM * var * (m / max(m - 1, 1))
    else:
        mu, var = running_mean, running_var
    inv_std = 1.0 / np.sqrt(var + BN_EPS)
    xhat = (x - mu) * inv_std
    return gamma * xhat + beta, (xhat, inv_std, gamma, train)


def batchnorm_backward(dy, cache):
    xhat, inv_std, gamma, train = cache
    dgamma = np.sum(dy * xhat, axis=(0, 1))
    dbeta = np.sum(dy, axis=(0, 1))
    dxhat = dy * gamma
    if not train:
        return dxhat * inv_std, dgamma, dbeta
    m = dy.shape[0] * dy.shape[1]
    dx = (inv_std / m) * (m * dxhat - dxhat.sum(axis=(0, 1))
                          - xhat * np.sum(dxhat * xhat, axis=(0, 1)))
    return dx, dgamma, dbeta


def relu(x):
    mask = x > 0
    return x * mask, mask


def relu_backward(dy, mask):
    return dy * mask
