"""Numpy 1-D residual network regressor."""
from .layers import conv1d_forward
from .network import (ModelConfig, ModelParams, forward, init_params,
                      load_checkpoint, loss_and_gradients, predict,
                      save_checkpoint, zero_params)
from .optim import AdamState, adam_step
from .training import History, TrainConfig, train

__all__ = [
    "AdamState", "History", "ModelConfig", "ModelParams", "TrainConfig",
    "adam_step", "conv1d_forward", "forward", "init_params", "load_checkpoint",
    "loss_and_gradients", "predict", "save_checkpoint", "train", "zero_params",
]
