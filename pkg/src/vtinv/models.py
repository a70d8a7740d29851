"""The three inversion architectures assembled from nn layers.

Every model maps 25-dimensional spectral feature vectors to 4624 pixel values
(one per cell of a 68x68 image). The recurrent model consumes sliding windows
of 10 consecutive feature vectors and predicts the image at the final step.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ShapeError, ValidationError
from .nn.layers import LSTM, Conv2D, Dense, Layer, ReLU, Reshape, Upsample2, layer_from_spec

ARCHITECTURES = ("FC_DNN", "CNN", "LSTM")

INPUT_DIM = 25
IMAGE_SIZE = 68
OUTPUT_DIM = IMAGE_SIZE * IMAGE_SIZE


@dataclass
class Model:
    architecture: str
    layers: list
    input_dim: int = INPUT_DIM
    image_size: int = IMAGE_SIZE
    seq_len: int = 0  # 0 for frame-wise models
    norm: object = None  # optional NormStats carried with the trained artifact

    def params(self) -> dict:
        """Named parameter tensors, ordered by layer position."""
        out = {}
        for i, layer in enumerate(self.layers):
            for name, arr in layer.params().items():
                out[f"{i:02d}.{layer.kind}.{name}"] = arr
        return out

    def forward(self, x):
        """Run all layers; returns (output, caches)."""
        caches = []
        for layer in self.layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def backward(self, grad_out, caches):
        """Backpropagate; returns (grad wrt input, named parameter grads)."""
        pgrads = {}
        grad = grad_out
        for i in range(len(self.layers) - 1, -1, -1):
            layer = self.layers[i]
            grad, layer_grads = layer.backward(grad, caches[i])
            for name, arr in layer_grads.items():
                pgrads[f"{i:02d}.{layer.kind}.{name}"] = arr
        return grad, pgrads

    def layer_specs(self) -> list:
        return [layer.spec() for layer in self.layers]


def count_params(model: Model) -> int:
    """Total number of scalar parameters."""
    return sum(arr.size for arr in model.params().values())


def build_fcdnn(hidden=1000, n_hidden_layers=5, input_dim=INPUT_DIM,
                output_dim=OUTPUT_DIM, seed=0) -> Model:
    """Fully connected net: input -> [hidden, ReLU] x n -> linear output."""
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    n_in = input_dim
    for _ in range(n_hidden_layers):
        layers.append(Dense(n_in, hidden, rng))
        layers.append(ReLU())
        n_in = hidden
    layers.append(Dense(n_in, output_dim, rng))
    return Model("FC_DNN", layers, input_dim=input_dim,
                 image_size=int(round(np.sqrt(output_dim))))


def build_cnn(dense_units=500, grid=17, filters=8, input_dim=INPUT_DIM, seed=0) -> Model:
    """Dense encoder into a grid of feature maps, then two 2x upsampling
    stages with 3x3 convolutions decoding to one output channel.

    Spatial path: grid -> 2*grid -> 4*grid, so the output image side is
    4*grid (68 for the default grid of 17).
    """
    rng = np.random.default_rng(seed)
    image_size = 4 * grid
    layers: list[Layer] = [
        Dense(input_dim, dense_units, rng),
        ReLU(),
        Dense(dense_units, grid * grid * filters, rng),
        ReLU(),
        Reshape((grid, grid, filters)),
        Upsample2(),
        Conv2D(filters, filters, rng),
        ReLU(),
        Upsample2(),
        Conv2D(filters, 1, rng),
        Reshape((image_size * image_size,)),
    ]
    return Model("CNN", layers, input_dim=input_dim, image_size=image_size)


def build_lstm(hidden=575, n_fc_layers=3, seq_len=10, input_dim=INPUT_DIM,
               output_dim=OUTPUT_DIM, seed=0) -> Model:
    """Per-step dense front end, two stacked LSTM layers, linear readout of
    the final step's hidden state."""
    rng = np.random.default_rng(seed)
    layers: list[Layer] = []
    n_in = input_dim
    for _ in range(n_fc_layers):
        layers.append(Dense(n_in, hidden, rng))
        layers.append(ReLU())
        n_in = hidden
    layers.append(LSTM(n_in, hidden, return_sequences=True, rng=rng))
    layers.append(LSTM(hidden, hidden, return_sequences=False, rng=rng))
    layers.append(Dense(hidden, output_dim, rng))
    return Model("LSTM", layers, input_dim=input_dim,
                 image_size=int(round(np.sqrt(output_dim))), seq_len=seq_len)


def model_from_specs(architecture: str, specs: list, input_dim=INPUT_DIM,
                     image_size=IMAGE_SIZE, seq_len=0) -> Model:
    """Rebuild a model skeleton (zero parameters) from serialized layer specs."""
    if architecture not in ARCHITECTURES:
        raise ValidationError(f"unknown architecture {architecture!r}")
    layers = [layer_from_spec(s) for s in specs]
    return Model(architecture, layers, input_dim=input_dim,
                 image_size=image_size, seq_len=seq_len)


def make_windows(features: np.ndarray, seq_len: int) -> np.ndarray:
    """Sliding windows of seq_len rows, stride 1, one window ending at every
    row; the first rows are left-padded by repeating row 0."""
    n, dim = features.shape
    padded = np.concatenate([np.repeat(features[:1], seq_len - 1, axis=0), features])
    windows = np.empty((n, seq_len, dim))
    for t in range(n):
        windows[t] = padded[t:t + seq_len]
    return windows


def predict_sequence(model: Model, features: np.ndarray) -> np.ndarray:
    """Predict one image per feature row; outputs clamped to [0, 1].

    Features must already be normalized. Returns [T, image_size, image_size].
    """
    features = np.asarray(features, dtype=np.float64)
    if features.ndim != 2 or features.shape[1] != model.input_dim:
        raise ShapeError(
            f"expected [T, {model.input_dim}] features, got {features.shape}"
        )
    if model.architecture == "LSTM":
        x = make_windows(features, model.seq_len)
    else:
        x = features
    out, _ = model.forward(x)
    out = np.clip(out, 0.0, 1.0)
    size = model.image_size
    return out.reshape(features.shape[0], size, size)
