"""Mini-batch training loop with validation-based model selection."""
import csv
import logging
from dataclasses import dataclass

import numpy as np

from ..exceptions import Diverged
from . import network
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    lr: float = 1e-3
    batch_size: int = 32
    max_epochs: int = 50
    max_steps: int = None
    patience: int = 10
    shuffle: bool = True
    standardize: bool = False
    eval_batch_size: int = 256


@dataclass
class History:
    epochs: list
    train_loss: list
    val_loss: list
    steps: int = 0
    best_epoch: int = -1

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["epoch", "train_loss", "val_loss"])
            for e, tr, va in zip(self.epochs, self.train_loss, self.val_loss):
                w.writerow([e, repr(float(tr)), repr(float(va))])


def evaluate_loss(model, X, y, batch_size=256):
    """Inference-mode loss over a full split."""
    if len(X) == 0:
        return float("nan")
    pred = network.predict(model, X, batch_size)
    return network.mse_loss(pred, np.asarray(y, dtype=np.float64))[0]


def set_input_normalization(model, X):
    """Store per-channel mean and std of ``X`` as the fixed input transform."""
    flat = np.asarray(X, dtype=np.float64).reshape(-1, X.shape[-1])
    model.buf["input.mean"][:] = flat.mean(axis=0)
    model.buf["input.scale"][:] = np.maximum(flat.std(axis=0), 1e-8)


def train(model, X_train, y_train, X_val=None, y_val=None, cfg=None, rng=None,
          callback=None):
    """Train ``model`` in place and return ``(best_model, history)``.

    Each epoch visits every training sample once in mini-batches. When
    validation data is given the parameters with the lowest validation loss are
    returned and training stops after ``cfg.patience`` epochs without
    improvement; otherwise the final parameters are returned.
    """
    cfg = cfg or TrainConfig()
    rng = rng if rng is not None else np.random.default_rng(0)
    X_train = np.asarray(X_train)
    y_train = np.asarray(y_train, dtype=np.float64)
    n = len(X_train)
    if n == 0:
        raise ValueError("training split is empty")
    has_val = X_val is not None and len(X_val) > 0
    if cfg.standardize:
        set_input_normalization(model, X_train)

    opt = AdamState.zeros(model.values.size, lr=cfg.lr)
    history = History([], [], [])
    best, best_val, stale = model.copy(), np.inf, 0
    for epoch in range(cfg.max_epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total, seen = 0.0, 0
        for start in range(0, n, cfg.batch_size):
            if cfg.max_steps is not None and history.steps >= cfg.max_steps:
                break
            idx = np.sort(order[start:start + cfg.batch_size])
            xb = np.asarray(X_train[idx], dtype=np.float64)
            out, caches = network.forward(model, xb, train=True)
            loss, dout = network.mse_loss(out, y_train[idx])
            if not np.isfinite(loss):
                raise Diverged(f"non-finite loss at step {history.steps}")
            network.backward(model, caches, dout)
            adam_step(opt, model.values, model.grads)
            history.steps += 1
            total += loss * len(idx)
            seen += len(idx)
        if seen == 0:
            break
        train_loss = total / seen
        val_loss = (evaluate_loss(model, X_val, y_val, cfg.eval_batch_size)
                    if has_val else float("nan"))
        history.epochs.append(epoch)
        history.train_loss.append(train_loss)
        history.val_loss.append(val_loss)
        log.info("epoch %d train %.5f val %.5f", epoch, train_loss, val_loss)
        if callback is not None:
            callback(epoch, train_loss, val_loss)
        if has_val:
            if val_loss < best_val:
                best, best_val, stale = model.copy(), val_loss, 0
                history.best_epoch = epoch
            else:
                stale += 1
                if stale >= cfg.patience:
                    break
    if not has_val:
        best = model.copy()
        history.best_epoch = history.epochs[-1] if history.epochs else -1
    return best, history
