"""1-D residual network regressing three alignment angles from a velocity window.

Architecture: stem convolution (+BN, ReLU), residual stages of basic blocks
(conv3-BN-ReLU-conv3-BN plus skip, then ReLU; 1x1 strided projection with BN on
the skip when the shape changes), global average pooling over time, and a
linear head with three outputs in degrees.

Trainable parameters live in one flat float64 vector with a fixed layout; batch
norm running statistics and the input normalization live in a separate buffer
vector that is not differentiated.
"""
import json
import struct
from dataclasses import dataclass, asdict, field

import numpy as np

from ..exceptions import CorruptManifest, ShapeMismatch
from . import layers

CHECKPOINT_MAGIC = b"IDVLNN01"


@dataclass(frozen=True)
class ModelConfig:
    in_channels: int = 6
    stem_filters: int = 64
    stem_kernel: int = 7
    stem_stride: int = 2
    stage_channels: tuple = (64, 128, 256, 512)
    blocks_per_stage: tuple = (2, 2, 2, 2)
    block_kernel: int = 3
    out_dim: int = 3

    def __post_init__(self):
        object.__setattr__(self, "stage_channels", tuple(self.stage_channels))
        object.__setattr__(self, "blocks_per_stage", tuple(self.blocks_per_stage))
        if len(self.stage_channels) != len(self.blocks_per_stage):
            raise ValueError("stage_channels and blocks_per_stage differ in length")
        dims = (self.in_channels, self.stem_filters, self.stem_kernel,
                self.stem_stride, self.block_kernel, *self.stage_channels,
                *self.blocks_per_stage)
        if min(dims) < 1:
            raise ValueError("all dimensions must be positive")
        if self.out_dim != 3:
            raise ValueError("output dimension is fixed at 3")

    @classmethod
    def resnet18(cls):
        return cls()

    @classmethod
    def desk(cls):
        return cls(stem_filters=32, stage_channels=(32, 64, 96, 128),
                   blocks_per_stage=(1, 1, 1, 1))

    @classmethod
    def tiny(cls):
        return cls(stem_filters=4, stage_channels=(4, 8), blocks_per_stage=(1, 1))

    def to_dict(self):
        d = asdict(self)
        d["stage_channels"] = list(self.stage_channels)
        d["blocks_per_stage"] = list(self.blocks_per_stage)
        return d

    def output_lengths(self, W):
        """Temporal length after the stem and after each stage."""
        L = layers.conv_out_len(W, self.stem_kernel, self.stem_stride,
                                self.stem_kernel // 2)
        out = [L]
        for s in range(len(self.stage_channels)):
            stride = 1 if s == 0 else 2
            L = layers.conv_out_len(L, self.block_kernel, stride, self.block_kernel // 2)
            out.append(L)
        return out


class Layout:
    """Name -> (offset, shape) map over a flat vector."""

    def __init__(self):
        self.entries = {}
        self.size = 0

    def add(self, name, shape):
        self.entries[name] = (self.size, tuple(shape))
        self.size += int(np.prod(shape))

    def views(self, flat):
        return {name: flat[off:off + int(np.prod(shape))].reshape(shape)
                for name, (off, shape) in self.entries.items()}


def _blocks(config):
    """Yield ``(prefix, c_in, c_out, stride)`` for every residual block."""
    c_in = config.stem_filters
    for s, (c_out, n_blocks) in enumerate(zip(config.stage_channels,
                                             config.blocks_per_stage)):
        for b in range(n_blocks):
            stride = 2 if (s > 0 and b == 0) else 1
            yield f"stage{s}.block{b}", c_in, c_out, stride
            c_in = c_out


def _needs_projection(c_in, c_out, stride):
    return c_in != c_out or stride != 1


def build_layouts(config):
    params, buffers = Layout(), Layout()

    def bn(prefix, c):
        params.add(f"{prefix}.gamma", (c,))
        params.add(f"{prefix}.beta", (c,))
        buffers.add(f"{prefix}.mean", (c,))
        buffers.add(f"{prefix}.var", (c,))

    buffers.add("input.mean", (config.in_channels,))
    buffers.add("input.scale", (config.in_channels,))
    params.add("stem.conv.w", (config.stem_filters, config.in_channels,
                               config.stem_kernel))
    bn("stem.bn", config.stem_filters)
    K = config.block_kernel
    for prefix, c_in, c_out, stride in _blocks(config):
        params.add(f"{prefix}.conv1.w", (c_out, c_in, K))
        bn(f"{prefix}.bn1", c_out)
        params.add(f"{prefix}.conv2.w", (c_out, c_out, K))
        bn(f"{prefix}.bn2", c_out)
        if _needs_projection(c_in, c_out, stride):
            params.add(f"{prefix}.proj.w", (c_out, c_in, 1))
            bn(f"{prefix}.proj_bn", c_out)
    params.add("head.w", (config.out_dim, config.stage_channels[-1]))
    params.add("head.b", (config.out_dim,))
    return params, buffers


@dataclass
class ModelParams:
    """Flat parameter vector, matching gradient slot and non-trainable buffers."""

    config: ModelConfig
    values: np.ndarray
    buffers: np.ndarray
    grads: np.ndarray = field(default=None)

    def __post_init__(self):
        self.layout, self.buffer_layout = build_layouts(self.config)
        self.values = np.asarray(self.values, dtype=np.float64)
        self.buffers = np.asarray(self.buffers, dtype=np.float64)
        if self.grads is None:
            self.grads = np.zeros_like(self.values)
        if self.values.shape != (self.layout.size,):
            raise ShapeMismatch("parameter vector does not match the layout")
        if self.buffers.shape != (self.buffer_layout.size,):
            raise ShapeMismatch("buffer vector does not match the layout")

    @property
    def p(self):
        return self.layout.views(self.values)

    @property
    def buf(self):
        return self.buffer_layout.views(self.buffers)

    def copy(self):
        return ModelParams(self.config, self.values.copy(), self.buffers.copy(),
                           self.grads.copy())


def neutral_buffers(config):
    _, buf_layout = build_layouts(config)
    flat = np.zeros(buf_layout.size)
    for name, view in buf_layout.views(flat).items():
        if name.endswith(".var") or name == "input.scale":
            view[:] = 1.0
    return flat


def init_params(config, rng, head_gain=0.1):
    """Kaiming (fan-in) normal conv weights, unit gamma, zero beta and bias.

    The head is scaled down by ``head_gain`` so an untrained model predicts
    angles close to zero.
    """
    layout, _ = build_layouts(config)
    flat = np.zeros(layout.size)
    for name, view in layout.views(flat).items():
        if name.endswith(".w"):
            fan_in = int(np.prod(view.shape[1:]))
            gain = head_gain if name == "head.w" else np.sqrt(2.0)
            view[:] = rng.standard_normal(view.shape) * gain / np.sqrt(fan_in)
        elif name.endswith(".gamma"):
            view[:] = 1.0
    return ModelParams(config, flat, neutral_buffers(config))


def zero_params(config):
    layout, _ = build_layouts(config)
    return ModelParams(config, np.zeros(layout.size), neutral_buffers(config))


def _check_input(config, X):
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 2:
        X = X[None]
    if X.ndim != 3 or X.shape[2] != config.in_channels:
        raise ShapeMismatch(f"expected (batch, W, {config.in_channels}), got {X.shape}")
    if min(config.output_lengths(X.shape[1])) < 1:
        raise ShapeMismatch(f"window length {X.shape[1]} is too short for the network")
    return X


def _bn(P, B, name, x, train, caches):
    y, c = layers.batchnorm(x, P[f"{name}.gamma"], P[f"{name}.beta"],
                            B[f"{name}.mean"], B[f"{name}.var"], train)
    caches[name] = c
    return y


def _conv(P, name, x, stride, padding, caches):
    y, c = layers.conv1d(x, P[f"{name}.w"], None, stride, padding)
    caches[name] = c
    return y


def residual_block(model, prefix, x, c_in, c_out, stride, train=False, caches=None):
    """``ReLU(BN(conv(ReLU(BN(conv(x))))) + skip)`` for one basic block.

    ``x`` is ``(batch, L, c_in)``; the skip is a strided 1x1 projection with BN
    when the channel count or the stride changes.
    """
    P, B = model.p, model.buf
    caches = {} if caches is None else caches
    pad = model.config.block_kernel // 2
    u = _conv(P, f"{prefix}.conv1", x, stride, pad, caches)
    u = _bn(P, B, f"{prefix}.bn1", u, train, caches)
    u, caches[f"{prefix}.relu1"] = layers.relu(u)
    u = _conv(P, f"{prefix}.conv2", u, 1, pad, caches)
    u = _bn(P, B, f"{prefix}.bn2", u, train, caches)
    skip = x
    if _needs_projection(c_in, c_out, stride):
        skip = _conv(P, f"{prefix}.proj", skip, stride, 0, caches)
        skip = _bn(P, B, f"{prefix}.proj_bn", skip, train, caches)
    y, caches[f"{prefix}.relu2"] = layers.relu(u + skip)
    return y


def forward(model, X, train=False):
    """Network output ``(batch, 3)`` in degrees and the backward cache.

    ``train=True`` uses batch statistics and updates the running statistics.
    """
    cfg = model.config
    X = _check_input(cfg, X)
    P, B = model.p, model.buf
    caches = {}
    h = (X - B["input.mean"]) / B["input.scale"]
    h = _conv(P, "stem.conv", h, cfg.stem_stride, cfg.stem_kernel // 2, caches)
    h = _bn(P, B, "stem.bn", h, train, caches)
    h, caches["stem.relu"] = layers.relu(h)
    for prefix, c_in, c_out, stride in _blocks(cfg):
        h = residual_block(model, prefix, h, c_in, c_out, stride, train, caches)
    caches["pool.len"] = h.shape[1]
    pooled = h.mean(axis=1)
    caches["pooled"] = pooled
    out = pooled @ P["head.w"].T + P["head.b"]
    return out, caches


def backward(model, caches, dout):
    """Accumulate parameter gradients of ``sum(dout * out)`` into ``model.grads``."""
    cfg = model.config
    P = model.p
    model.grads[:] = 0.0
    G = model.layout.views(model.grads)

    G["head.w"][:] = dout.T @ caches["pooled"]
    G["head.b"][:] = dout.sum(axis=0)
    dpooled = dout @ P["head.w"]
    L = caches["pool.len"]
    dh = np.repeat(dpooled[:, None, :] / L, L, axis=1)

    def bn_back(name, dy):
        dx, dg, db = layers.batchnorm_backward(dy, caches[name])
        G[f"{name}.gamma"][:] += dg
        G[f"{name}.beta"][:] += db
        return dx

    def conv_back(name, dy):
        dx, dw, _ = layers.conv1d_backward(dy, P[f"{name}.w"], caches[name])
        G[f"{name}.w"][:] += dw
        return dx

    for prefix, c_in, c_out, stride in reversed(list(_blocks(cfg))):
        dsum = layers.relu_backward(dh, caches[f"{prefix}.relu2"])
        if _needs_projection(c_in, c_out, stride):
            dskip = conv_back(f"{prefix}.proj", bn_back(f"{prefix}.proj_bn", dsum))
        else:
            dskip = dsum
        du = bn_back(f"{prefix}.bn2", dsum)
        du = conv_back(f"{prefix}.conv2", du)
        du = layers.relu_backward(du, caches[f"{prefix}.relu1"])
        du = bn_back(f"{prefix}.bn1", du)
        dh = conv_back(f"{prefix}.conv1", du) + dskip
    dh = layers.relu_backward(dh, caches["stem.relu"])
    dh = bn_back("stem.bn", dh)
    conv_back("stem.conv", dh)
    return model.grads


def mse_loss(pred, target):
    """Summed squared angle error divided by the number of samples [deg^2]."""
    diff = pred - target
    n = len(pred)
    return float(np.sum(diff**2) / n), 2.0 * diff / n


def loss_and_gradients(model, X, y, train=True):
    """Loss and gradient vector for one batch (``y`` in degrees).

    Batch norm uses batch statistics when ``train`` is true; running statistics
    are left untouched either way.
    """
    y = np.asarray(y, dtype=np.float64)
    if len(y) == 0:
        raise ValueError("empty batch")
    saved = model.buffers.copy()
    out, caches = forward(model, X, train=train)
    model.buffers[:] = saved
    if out.shape != y.shape:
        raise ShapeMismatch(f"labels {y.shape} do not match output {out.shape}")
    loss, dout = mse_loss(out, y)
    return loss, backward(model, caches, dout).copy()


def predict(model, X, batch_size=256):
    """Inference-mode outputs ``(n, 3)`` in degrees."""
    X = np.asarray(X, dtype=np.float64)
    single = X.ndim == 2
    if single:
        X = X[None]
    outs = [forward(model, X[i:i + batch_size], train=False)[0]
            for i in range(0, len(X), batch_size)]
    out = np.concatenate(outs) if outs else np.zeros((0, 3))
    return out[0] if single else out


_U32 = struct.Struct("<I")


def save_checkpoint(model, path, extra=None):
    """Magic, u32 JSON-header length, JSON header, float64 params then buffers."""
    header = {"config": model.config.to_dict(), "n_params": int(model.values.size),
              "n_buffers": int(model.buffers.size)}
    if extra:
        header["extra"] = extra
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(_U32.pack(len(blob)))
        fh.write(blob)
        fh.write(np.concatenate([model.values, model.buffers]).astype("<f8").tobytes())


def load_checkpoint(path):
    """Returns ``(ModelParams, header_dict)``."""
    with open(path, "rb") as fh:
        data = fh.read()
    if data[:8] != CHECKPOINT_MAGIC:
        raise CorruptManifest(f"{path}: not a network checkpoint")
    (n,) = _U32.unpack(data[8:12])
    try:
        header = json.loads(data[12:12 + n].decode("utf-8"))
        config = ModelConfig(**header["config"])
    except (ValueError, KeyError, TypeError) as exc:
        raise CorruptManifest(f"{path}: bad header: {exc}") from exc
    arr = np.frombuffer(data[12 + n:], dtype="<f8")
    n_p, n_b = header["n_params"], header["n_buffers"]
    if arr.size != n_p + n_b:
        raise CorruptManifest(f"{path}: expected {n_p + n_b} values, found {arr.size}")
    model = ModelParams(config, arr[:n_p].copy(), arr[n_p:].copy())
    return model, header
