"""Numba-compiled hot kernels; semantics identical to _kernels_numpy.

Plain loops, no parallel sections: reductions run in a fixed order so results
are deterministic and batch-order independent.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def conv2d_forward(x, kernels, bias):
    b, h, w, ci = x.shape
    co = kernels.shape[3]
    out = np.empty((b, h, w, co))
    for n in range(b):
        for i in range(h):
            for j in range(w):
                for o in range(co):
                    acc = bias[o]
                    for u in range(3):
                        ii = i + u - 1
                        if ii < 0 or ii >= h:
                            continue
                        for v in range(3):
                            jj = j + v - 1
                            if jj < 0 or jj >= w:
                                continue
                            for c in range(ci):
                                acc += x[n, ii, jj, c] * kernels[u, v, c, o]
                    out[n, i, j, o] = acc
    return out


@njit(cache=True)
def conv2d_backward(x, kernels, grad_out):
    b, h, w, ci = x.shape
    co = kernels.shape[3]
    grad_x = np.zeros((b, h, w, ci))
    grad_k = np.zeros((3, 3, ci, co))
    grad_b = np.zeros(co)
    for n in range(b):
        for i in range(h):
            for j in range(w):
                for o in range(co):
                    g = grad_out[n, i, j, o]
                    grad_b[o] += g
                    for u in range(3):
                        ii = i + u - 1
                        if ii < 0 or ii >= h:
                            continue
                        for v in range(3):
                            jj = j + v - 1
                            if jj < 0 or jj >= w:
                                continue
                            for c in range(ci):
                                grad_k[u, v, c, o] += x[n, ii, jj, c] * g
                                grad_x[n, ii, jj, c] += kernels[u, v, c, o] * g
    return grad_x, grad_k, grad_b


@njit(cache=True)
def maxpool2_forward(x):
    b, h, w, c = x.shape
    h2, w2 = h // 2, w // 2
    out = np.empty((b, h2, w2, c))
    idx = np.zeros((b, h2, w2, c), dtype=np.int64)
    for n in range(b):
        for i in range(h2):
            for j in range(w2):
                for k in range(c):
                    best = x[n, 2 * i, 2 * j, k]
                    arg = 0
                    for p in range(4):
                        v = x[n, 2 * i + p // 2, 2 * j + p % 2, k]
                        if v > best:
                            best = v
                            arg = p
                    out[n, i, j, k] = best
                    idx[n, i, j, k] = arg
    return out, idx


@njit(cache=True)
def maxpool2_backward(idx, grad_out):
    b, h2, w2, c = grad_out.shape
    grad_x = np.zeros((b, 2 * h2, 2 * w2, c))
    for n in range(b):
        for i in range(h2):
            for j in range(w2):
                for k in range(c):
                    p = idx[n, i, j, k]
                    grad_x[n, 2 * i + p // 2, 2 * j + p % 2, k] = grad_out[n, i, j, k]
    return grad_x


@njit(cache=True)
def upsample2_forward(x):
    b, h, w, c = x.shape
    out = np.empty((b, 2 * h, 2 * w, c))
    for n in range(b):
        for i in range(2 * h):
            for j in range(2 * w):
                for k in range(c):
                    out[n, i, j, k] = x[n, i // 2, j // 2, k]
    return out


@njit(cache=True)
def upsample2_backward(grad_out):
    b, h, w, c = grad_out.shape
    grad_x = np.zeros((b, h // 2, w // 2, c))
    for n in range(b):
        for i in range(h):
            for j in range(w):
                for k in range(c):
                    grad_x[n, i // 2, j // 2, k] += grad_out[n, i, j, k]
    return grad_x
