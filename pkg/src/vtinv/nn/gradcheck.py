"""Central finite-difference gradient checking for layers and whole models."""

import numpy as np

from .loss import mse_loss, mse_loss_grad


def max_rel_error(loss_fn, arrays, analytic_grads, h=1e-5):
    """Worst-case relative error between analytic and central-difference grads.

    Perturbs every entry of every array in place. The relative error uses an
    absolute floor of 1e-4 in the denominator so near-zero gradients are
    compared absolutely instead of amplifying finite-difference noise.
    """
    worst = 0.0
    for arr, grad in zip(arrays, analytic_grads):
        flat = arr.ravel()
        gflat = grad.ravel()
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            f_plus = loss_fn()
            flat[i] = orig - h
            f_minus = loss_fn()
            flat[i] = orig
            numeric = (f_plus - f_minus) / (2.0 * h)
            denom = max(abs(numeric) + abs(gflat[i]), 1e-4)
            worst = max(worst, abs(numeric - gflat[i]) / denom)
    return worst


def check_layer(layer, x, h=1e-5, rng=None):
    """Gradient-check one layer against finite differences.

    The scalar objective is a fixed random projection of the layer output, so
    output gradients are dense and non-degenerate. Checks parameters and the
    input. Returns the max relative error.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    y0, _ = layer.forward(x)
    proj = rng.standard_normal(y0.shape)

    def loss_fn():
        y, _ = layer.forward(x)
        return float(np.sum(y * proj))

    y, cache = layer.forward(x)
    grad_in, pgrads = layer.backward(proj, cache)
    names = sorted(layer.params())
    arrays = [x] + [layer.params()[n] for n in names]
    grads = [grad_in] + [pgrads[n] for n in names]
    return max_rel_error(loss_fn, arrays, grads, h=h)


def check_model(model, x, target, h=1e-5):
    """Gradient-check a whole model under the MSE training loss."""

    def loss_fn():
        y, _ = model.forward(x)
        return mse_loss(y, target)

    y, caches = model.forward(x)
    _, gout = mse_loss_grad(y, target)
    grad_in, pgrads = model.backward(gout, caches)
    params = model.params()
    names = sorted(params)
    arrays = [x] + [params[n] for n in names]
    grads = [grad_in] + [pgrads[n] for n in names]
    return max_rel_error(loss_fn, arrays, grads, h=h)
