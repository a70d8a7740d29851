"""Minimal neural-network engine: layers, loss, Adam, gradient checking.

All tensors are row-major float64 numpy arrays; layer outputs stay finite for
finite inputs. Hot image kernels live in .kernels with numba and numpy paths.
"""

from .gradcheck import check_layer, check_model, max_rel_error
from .kernels import USE_NUMBA
from .layers import (
    LSTM,
    Conv2D,
    Dense,
    Layer,
    MaxPool2,
    ReLU,
    Reshape,
    Upsample2,
    layer_from_spec,
)
from .loss import mse_loss, mse_loss_grad
from .optim import AdamState, adam_step, clip_global_norm, init_adam

__all__ = [
    "USE_NUMBA",
    "Layer",
    "Dense",
    "ReLU",
    "Conv2D",
    "MaxPool2",
    "Upsample2",
    "Reshape",
    "LSTM",
    "layer_from_spec",
    "mse_loss",
    "mse_loss_grad",
    "AdamState",
    "init_adam",
    "adam_step",
    "clip_global_norm",
    "check_layer",
    "check_model",
    "max_rel_error",
]
