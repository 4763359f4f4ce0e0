"""Alignment estimators with a scikit-learn interface.

Both map windows ``X`` of shape ``(n, W, 6)`` (DVL velocity in columns 0-2,
INS body velocity in columns 3-5) to Euler angles ``(n, 3)`` in degrees.
"""
import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from . import so3
from .exceptions import DegenerateWindow, MissingModel
from .nn import network
from .nn.network import ModelConfig
from .nn.training import TrainConfig, train
from .validation import check_labels, check_windows
from .wahba import _DEGENERATE_RATIO, svd_align_batch


class SVDAligner(RegressorMixin, BaseEstimator):
    """Closed-form Wahba solution on each window; nothing to learn.

    Parameters
    ----------
    strict : bool
        Raise :class:`DegenerateWindow` when a window does not determine the
        rotation. With ``strict=False`` the (arbitrary) SVD answer is returned.
    """

    def __init__(self, strict=True):
        self.strict = strict

    def fit(self, X, y=None):
        X = check_windows(X)
        self.window_len_ = X.shape[1]
        return self

    def predict_matrix(self, X):
        X = check_windows(X)
        R, s = svd_align_batch(X[..., 3:], X[..., :3])
        if self.strict:
            bad = (s[:, 0] == 0) | (s[:, 1] < _DEGENERATE_RATIO * s[:, 0])
            if np.any(bad):
                raise DegenerateWindow(f"{int(bad.sum())} degenerate window(s)")
        return R

    def predict(self, X):
        return np.rad2deg(so3.matrix_to_euler(self.predict_matrix(X)))

    def __sklearn_tags__(self):
        tags = super().__sklearn_tags__()
        tags.requires_fit = False
        return tags


class ResNetAligner(RegressorMixin, BaseEstimator):
    """1-D residual network regressor trained with Adam on squared degree error."""

    def __init__(self, stem_filters=32, stem_kernel=7, stem_stride=2,
                 stage_channels=(32, 64, 96, 128), blocks_per_stage=(1, 1, 1, 1),
                 block_kernel=3, lr=1e-3, batch_size=32, max_epochs=50,
                 max_steps=None, patience=10, shuffle=True, standardize=False,
                 head_gain=0.1, random_state=0):
        self.stem_filters = stem_filters
        self.stem_kernel = stem_kernel
        self.stem_stride = stem_stride
        self.stage_channels = stage_channels
        self.blocks_per_stage = blocks_per_stage
        self.block_kernel = block_kernel
        self.lr = lr
        self.batch_size = batch_size
        self.max_epochs = max_epochs
        self.max_steps = max_steps
        self.patience = patience
        self.shuffle = shuffle
        self.standardize = standardize
        self.head_gain = head_gain
        self.random_state = random_state

    def model_config(self):
        return ModelConfig(stem_filters=self.stem_filters, stem_kernel=self.stem_kernel,
                           stem_stride=self.stem_stride,
                           stage_channels=tuple(self.stage_channels),
                           blocks_per_stage=tuple(self.blocks_per_stage),
                           block_kernel=self.block_kernel)

    def train_config(self):
        return TrainConfig(lr=self.lr, batch_size=self.batch_size,
                           max_epochs=self.max_epochs, max_steps=self.max_steps,
                           patience=self.patience, shuffle=self.shuffle,
                           standardize=self.standardize)

    def fit(self, X, y, X_val=None, y_val=None, callback=None):
        X = check_windows(X)
        y = check_labels(y, len(X))
        if X_val is not None:
            X_val = check_windows(X_val)
            y_val = check_labels(y_val, len(X_val))
        rng = np.random.default_rng(self.random_state)
        model = network.init_params(self.model_config(), rng, self.head_gain)
        self.model_, self.history_ = train(model, X, y, X_val, y_val,
                                           self.train_config(), rng, callback)
        self.window_len_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "model_")
        return network.predict(self.model_, check_windows(X))

    def save(self, path):
        check_is_fitted(self, "model_")
        network.save_checkpoint(self.model_, path, extra={
            "window_len": int(self.window_len_), "params": _jsonable(self.get_params())})

    @classmethod
    def load(cls, path):
        try:
            model, header = network.load_checkpoint(path)
        except FileNotFoundError as exc:
            raise MissingModel(f"no checkpoint at {path}") from exc
        extra = header.get("extra", {})
        est = cls(**extra.get("params", {}))
        cfg = model.config
        est.set_params(stem_filters=cfg.stem_filters, stem_kernel=cfg.stem_kernel,
                       stem_stride=cfg.stem_stride, stage_channels=cfg.stage_channels,
                       blocks_per_stage=cfg.blocks_per_stage,
                       block_kernel=cfg.block_kernel)
        est.model_ = model
        est.window_len_ = extra.get("window_len")
        return est


def _jsonable(params):
    return {k: list(v) if isinstance(v, tuple) else v for k, v in params.items()}
