"""Mean-squared-error loss over all elements."""

import numpy as np

from ..errors import ShapeError


def mse_loss(pred, target):
    """Mean of squared differences over every element."""
    if pred.shape != target.shape:
        raise ShapeError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    diff = pred - target
    return float(np.mean(diff * diff))


def mse_loss_grad(pred, target):
    """Returns (loss, dloss/dpred)."""
    if pred.shape != target.shape:
        raise ShapeError(f"mse shapes differ: {pred.shape} vs {target.shape}")
    diff = pred - target
    loss = float(np.mean(diff * diff))
    return loss, (2.0 / diff.size) * diff
