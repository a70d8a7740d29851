"""Pure-numpy implementations of the hot image-layer kernels.

Fallback path for when numba is unavailable or disabled via VTINV_NO_NUMBA.
Array layouts match the numba kernels exactly: NHWC activations, kernels
[3, 3, c_in, c_out], float64 throughout.
"""

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


def conv2d_forward(x, kernels, bias):
    """3x3 same-padding cross-correlation. x: [B,H,W,Ci] -> [B,H,W,Co]."""
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))  # [B,H,W,Ci,3,3]
    return np.einsum("bhwcuv,uvco->bhwo", win, kernels, optimize=True) + bias


def conv2d_backward(x, kernels, grad_out):
    """Gradients of conv2d_forward w.r.t. input, kernels, and bias."""
    xp = np.pad(x, ((0, 0), (1, 1), (1, 1), (0, 0)))
    win = sliding_window_view(xp, (3, 3), axis=(1, 2))
    grad_k = np.einsum("bhwcuv,bhwo->uvco", win, grad_out, optimize=True)
    grad_b = grad_out.sum(axis=(0, 1, 2))
    gp = np.pad(grad_out, ((0, 0), (1, 1), (1, 1), (0, 0)))
    gwin = sliding_window_view(gp, (3, 3), axis=(1, 2))  # [B,H,W,Co,3,3]
    kflip = kernels[::-1, ::-1]
    grad_x = np.einsum("bhwouv,uvco->bhwc", gwin, kflip, optimize=True)
    return grad_x, grad_k, grad_b


def maxpool2_forward(x):
    """2x2 non-overlapping max. Returns (pooled, argmax) with argmax in 0..3
    enumerating the pool window row-major; ties resolve to the first maximum."""
    b, h, w, c = x.shape
    xr = (
        x.reshape(b, h // 2, 2, w // 2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(b, h // 2, w // 2, 4, c)
    )
    idx = xr.argmax(axis=3)
    out = np.take_along_axis(xr, idx[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return out, idx


def maxpool2_backward(idx, grad_out):
    """Route gradients to the argmax positions recorded by the forward pass."""
    b, h2, w2, c = grad_out.shape
    gr = np.zeros((b, h2, w2, 4, c))
    np.put_along_axis(gr, idx[:, :, :, None, :], grad_out[:, :, :, None, :], axis=3)
    return (
        gr.reshape(b, h2, w2, 2, 2, c)
        .transpose(0, 1, 3, 2, 4, 5)
        .reshape(b, 2 * h2, 2 * w2, c)
    )


def upsample2_forward(x):
    """Nearest-neighbor 2x replication in both spatial dimensions."""
    return np.repeat(np.repeat(x, 2, axis=1), 2, axis=2)


def upsample2_backward(grad_out):
    """Sum gradients over each 2x2 replica block."""
    b, h, w, c = grad_out.shape
    return grad_out.reshape(b, h // 2, 2, w // 2, 2, c).sum(axis=(2, 4))
