"""Layer forward/backward passes for the three network architectures.

Tensors are row-major float64 numpy arrays. Every layer is stateless during
the pass: forward returns (output, cache) and backward consumes the cache, so
concurrent predictions on shared parameters are safe.
"""

import numpy as np

from ..errors import ShapeError, ValidationError
from . import kernels


def glorot_uniform(rng, shape, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape)


def sigmoid(z):
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


class Layer:
    kind = "?"

    def params(self) -> dict:
        return {}

    def spec(self) -> dict:
        return {"kind": self.kind}

    def forward(self, x):
        raise NotImplementedError

    def backward(self, grad_out, cache):
        raise NotImplementedError


class Dense(Layer):
    """Affine map on the last axis; leading axes are treated as batch."""

    kind = "dense"

    def __init__(self, n_in, n_out, rng=None):
        self.n_in = int(n_in)
        self.n_out = int(n_out)
        if rng is None:
            self.W = np.zeros((self.n_in, self.n_out))
        else:
            self.W = glorot_uniform(rng, (self.n_in, self.n_out), self.n_in, self.n_out)
        self.b = np.zeros(self.n_out)

    def params(self):
        return {"W": self.W, "b": self.b}

    def spec(self):
        return {"kind": self.kind, "n_in": self.n_in, "n_out": self.n_out}

    def forward(self, x):
        if x.shape[-1] != self.n_in:
            raise ShapeError(f"dense expects last axis {self.n_in}, got {x.shape}")
        lead = x.shape[:-1]
        x2 = x.reshape(-1, self.n_in)
        y = x2 @ self.W + self.b
        return y.reshape(lead + (self.n_out,)), (x2, lead)

    def backward(self, grad_out, cache):
        x2, lead = cache
        g2 = grad_out.reshape(-1, self.n_out)
        grad_w = x2.T @ g2
        grad_b = g2.sum(axis=0)
        grad_in = (g2 @ self.W.T).reshape(lead + (self.n_in,))
        return grad_in, {"W": grad_w, "b": grad_b}


class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        mask = x > 0
        return np.where(mask, x, 0.0), mask

    def backward(self, grad_out, cache):
        return np.where(cache, grad_out, 0.0), {}


class Conv2D(Layer):
    """3x3 cross-correlation, zero padding 1, NHWC layout."""

    kind = "conv2d"

    def __init__(self, c_in, c_out, rng=None):
        self.c_in = int(c_in)
        self.c_out = int(c_out)
        fan_in = 9 * self.c_in
        fan_out = 9 * self.c_out
        if rng is None:
            self.W = np.zeros((3, 3, self.c_in, self.c_out))
        else:
            self.W = glorot_uniform(rng, (3, 3, self.c_in, self.c_out), fan_in, fan_out)
        self.b = np.zeros(self.c_out)

    def params(self):
        return {"W": self.W, "b": self.b}

    def spec(self):
        return {"kind": self.kind, "c_in": self.c_in, "c_out": self.c_out}

    def forward(self, x):
        if x.ndim != 4 or x.shape[3] != self.c_in:
            raise ShapeError(f"conv2d expects [B,H,W,{self.c_in}], got {x.shape}")
        x = np.ascontiguousarray(x)
        return kernels.conv2d_forward(x, self.W, self.b), x

    def backward(self, grad_out, cache):
        grad_out = np.ascontiguousarray(grad_out)
        grad_x, grad_k, grad_b = kernels.conv2d_backward(cache, self.W, grad_out)
        return grad_x, {"W": grad_k, "b": grad_b}


class MaxPool2(Layer):
    kind = "maxpool2"

    def forward(self, x):
        if x.ndim != 4:
            raise ShapeError(f"maxpool2 expects [B,H,W,C], got {x.shape}")
        if x.shape[1] % 2 or x.shape[2] % 2:
            raise ShapeError(f"maxpool2 requires even spatial extents, got {x.shape}")
        out, idx = kernels.maxpool2_forward(np.ascontiguousarray(x))
        return out, idx

    def backward(self, grad_out, cache):
        return kernels.maxpool2_backward(cache, np.ascontiguousarray(grad_out)), {}


class Upsample2(Layer):
    kind = "upsample2"

    def forward(self, x):
        if x.ndim != 4:
            raise ShapeError(f"upsample2 expects [B,H,W,C], got {x.shape}")
        return kernels.upsample2_forward(np.ascontiguousarray(x)), None

    def backward(self, grad_out, cache):
        return kernels.upsample2_backward(np.ascontiguousarray(grad_out)), {}


class Reshape(Layer):
    """Per-sample reshape; the batch axis is preserved."""

    kind = "reshape"

    def __init__(self, shape):
        self.shape = tuple(int(s) for s in shape)

    def spec(self):
        return {"kind": self.kind, "shape": list(self.shape)}

    def forward(self, x):
        return x.reshape((x.shape[0],) + self.shape), x.shape

    def backward(self, grad_out, cache):
        return grad_out.reshape(cache), {}


class LSTM(Layer):
    """Single LSTM layer over [B, T, n_in] with zero initial state.

    Gate pre-activations are computed as [x_t, h_{t-1}] @ W + b with the
    column blocks ordered input gate, forget gate, candidate, output gate.
    With return_sequences=False only the final hidden state is emitted.
    """

    kind = "lstm"

    def __init__(self, n_in, n_hidden, return_sequences=True, rng=None):
        self.n_in = int(n_in)
        self.n_hidden = int(n_hidden)
        self.return_sequences = bool(return_sequences)
        rows = self.n_in + self.n_hidden
        cols = 4 * self.n_hidden
        if rng is None:
            self.W = np.zeros((rows, cols))
        else:
            self.W = glorot_uniform(rng, (rows, cols), rows, cols)
        self.b = np.zeros(cols)
        # forget-gate bias starts at 1 to keep early memory open
        self.b[self.n_hidden:2 * self.n_hidden] = 1.0

    def params(self):
        return {"W": self.W, "b": self.b}

    def spec(self):
        return {
            "kind": self.kind,
            "n_in": self.n_in,
            "n_hidden": self.n_hidden,
            "return_sequences": self.return_sequences,
        }

    def forward(self, x):
        if x.ndim != 3 or x.shape[2] != self.n_in:
            raise ShapeError(f"lstm expects [B,T,{self.n_in}], got {x.shape}")
        batch, steps, _ = x.shape
        hsz = self.n_hidden
        xh = np.empty((steps, batch, self.n_in + hsz))
        gates = np.empty((steps, batch, 4 * hsz))
        cells = np.empty((steps, batch, hsz))
        tanh_c = np.empty((steps, batch, hsz))
        hidden = np.empty((steps, batch, hsz))
        h_prev = np.zeros((batch, hsz))
        c_prev = np.zeros((batch, hsz))
        for t in range(steps):
            xh[t, :, :self.n_in] = x[:, t]
            xh[t, :, self.n_in:] = h_prev
            z = xh[t] @ self.W + self.b
            gi = sigmoid(z[:, :hsz])
            gf = sigmoid(z[:, hsz:2 * hsz])
            gg = np.tanh(z[:, 2 * hsz:3 * hsz])
            go = sigmoid(z[:, 3 * hsz:])
            c = gf * c_prev + gi * gg
            tc = np.tanh(c)
            gates[t, :, :hsz] = gi
            gates[t, :, hsz:2 * hsz] = gf
            gates[t, :, 2 * hsz:3 * hsz] = gg
            gates[t, :, 3 * hsz:] = go
            cells[t] = c
            tanh_c[t] = tc
            hidden[t] = go * tc
            h_prev = hidden[t]
            c_prev = c
        cache = (xh, gates, cells, tanh_c, batch, steps)
        if self.return_sequences:
            return hidden.transpose(1, 0, 2), cache
        return hidden[-1].copy(), cache

    def backward(self, grad_out, cache):
        xh, gates, cells, tanh_c, batch, steps = cache
        hsz = self.n_hidden
        if self.return_sequences:
            dh_seq = grad_out.transpose(1, 0, 2)
        else:
            dh_seq = np.zeros((steps, batch, hsz))
            dh_seq[-1] = grad_out
        grad_w = np.zeros_like(self.W)
        grad_b = np.zeros_like(self.b)
        grad_x = np.empty((steps, batch, self.n_in))
        dh_next = np.zeros((batch, hsz))
        dc_next = np.zeros((batch, hsz))
        for t in range(steps - 1, -1, -1):
            gi = gates[t, :, :hsz]
            gf = gates[t, :, hsz:2 * hsz]
            gg = gates[t, :, 2 * hsz:3 * hsz]
            go = gates[t, :, 3 * hsz:]
            c_prev = cells[t - 1] if t > 0 else np.zeros((batch, hsz))
            dh = dh_seq[t] + dh_next
            dc = dc_next + dh * go * (1.0 - tanh_c[t] ** 2)
            dz = np.empty((batch, 4 * hsz))
            dz[:, :hsz] = dc * gg * gi * (1.0 - gi)
            dz[:, hsz:2 * hsz] = dc * c_prev * gf * (1.0 - gf)
            dz[:, 2 * hsz:3 * hsz] = dc * gi * (1.0 - gg**2)
            dz[:, 3 * hsz:] = dh * tanh_c[t] * go * (1.0 - go)
            grad_w += xh[t].T @ dz
            grad_b += dz.sum(axis=0)
            dxh = dz @ self.W.T
            grad_x[t] = dxh[:, :self.n_in]
            dh_next = dxh[:, self.n_in:]
            dc_next = dc * gf
        return grad_x.transpose(1, 0, 2), {"W": grad_w, "b": grad_b}


LAYER_KINDS = {
    "dense": Dense,
    "relu": ReLU,
    "conv2d": Conv2D,
    "maxpool2": MaxPool2,
    "upsample2": Upsample2,
    "reshape": Reshape,
    "lstm": LSTM,
}


def layer_from_spec(spec: dict) -> Layer:
    """Rebuild a layer (zero-initialized parameters) from its spec dict."""
    kind = spec.get("kind")
    if kind not in LAYER_KINDS:
        raise ValidationError(f"unknown layer kind {kind!r}")
    if kind == "dense":
        return Dense(spec["n_in"], spec["n_out"])
    if kind == "conv2d":
        return Conv2D(spec["c_in"], spec["c_out"])
    if kind == "reshape":
        return Reshape(spec["shape"])
    if kind == "lstm":
        return LSTM(spec["n_in"], spec["n_hidden"], spec["return_sequences"])
    return LAYER_KINDS[kind]()
