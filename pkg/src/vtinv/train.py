"""Mini-batch training with validation-driven early stopping, plus the model
container format.

Container layout: a UTF-8 text manifest (magic line, key=value header, one
"layer" line per layer, one "param"/"extra" line per tensor with byte offsets
into the payload), a single "DATA" line, then raw little-endian float64
payloads. Loading reconstructs a model whose predictions are bit-identical.
"""

import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import CorruptionError, DivergenceError, FormatError, SizeError, ValidationError
from .frontend import NormStats
from .models import Model, model_from_specs
from .nn.loss import mse_loss, mse_loss_grad
from .nn.optim import adam_step, clip_global_norm, init_adam


@dataclass
class TrainConfig:
    max_epochs: int = 100
    patience: int = 5
    batch_size: int = 128
    lr: float = 1e-3
    seed: int = 0
    shuffle: bool = True
    grad_clip: float = 5.0  # applied to LSTM models only

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ValidationError("max_epochs must be >= 1")
        if self.patience < 1:
            raise ValidationError("patience must be >= 1")
        if self.batch_size < 1:
            raise ValidationError("batch_size must be >= 1")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    best_epoch: int = 0  # 1-based epoch index of the lowest validation loss
    stopped_early: bool = False
    batch_sizes: list = field(default_factory=list)  # per epoch, in order


class EarlyStopper:
    """Patience rule: stop after `patience` consecutive epochs without a new
    strict minimum of the validation loss."""

    def __init__(self, patience: int):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.streak = 0

    def update(self, epoch: int, val_loss: float) -> str:
        """Returns 'improved', 'continue', or 'stop'."""
        if val_loss < self.best:
            self.best = val_loss
            self.best_epoch = epoch
            self.streak = 0
            return "improved"
        self.streak += 1
        if self.streak >= self.patience:
            return "stop"
        return "continue"


def _batched_mse(model: Model, x, y, batch_size: int) -> float:
    total = 0.0
    for start in range(0, x.shape[0], batch_size):
        xb = x[start:start + batch_size]
        yb = y[start:start + batch_size]
        pred, _ = model.forward(xb)
        total += mse_loss(pred, yb) * xb.shape[0]
    return total / x.shape[0]


def train(model: Model, train_pairs, val_pairs, config: TrainConfig,
          checkpoint_path=None):
    """Train a model; returns (model with best-epoch weights, TrainHistory).

    train_pairs/val_pairs are (inputs, targets) arrays: [N, 25] or
    [N, seq_len, 25] inputs against [N, 4624] targets.
    """
    x_train, y_train = train_pairs
    x_val, y_val = val_pairs
    n = x_train.shape[0]
    if n == 0:
        raise SizeError("training set is empty")

    params = model.params()
    state = init_adam(params, lr=config.lr)
    rng = np.random.default_rng(config.seed)
    stopper = EarlyStopper(config.patience)
    history = TrainHistory()
    best_params = None

    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n) if config.shuffle else np.arange(n)
        epoch_batches = []
        running = 0.0
        for bi, start in enumerate(range(0, n, config.batch_size)):
            idx = order[start:start + config.batch_size]
            xb = x_train[idx]
            yb = y_train[idx]
            pred, caches = model.forward(xb)
            loss, gout = mse_loss_grad(pred, yb)
            if not np.isfinite(loss):
                raise DivergenceError(
                    f"non-finite training loss at epoch {epoch}, batch {bi + 1}"
                )
            _, grads = model.backward(gout, caches)
            if model.architecture == "LSTM" and config.grad_clip > 0:
                clip_global_norm(grads, config.grad_clip)
            adam_step(params, grads, state)
            running += loss * xb.shape[0]
            epoch_batches.append(int(xb.shape[0]))
        history.train_loss.append(running / n)
        history.batch_sizes.append(epoch_batches)

        val = _batched_mse(model, x_val, y_val, config.batch_size)
        if not np.isfinite(val):
            raise DivergenceError(f"non-finite validation loss at epoch {epoch}")
        history.val_loss.append(val)

        verdict = stopper.update(epoch, val)
        if verdict == "improved":
            best_params = {k: v.copy() for k, v in params.items()}
            if checkpoint_path is not None:
                save_model(model, checkpoint_path)
        elif verdict == "stop":
            history.stopped_early = True
            break

    history.best_epoch = stopper.best_epoch
    if best_params is not None:
        for name, value in best_params.items():
            params[name][...] = value
        if checkpoint_path is not None:
            save_model(model, checkpoint_path)
    return model, history


# ---------------------------------------------------------------------------
# Model container

CONTAINER_MAGIC = "VTMC1"


def _format_spec(spec: dict) -> str:
    parts = [f"kind={spec['kind']}"]
    for key in sorted(spec):
        if key == "kind":
            continue
        value = spec[key]
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        parts.append(f"{key}={value}")
    return " ".join(parts)


def _parse_spec(line: str) -> dict:
    spec = {}
    for token in line.split():
        key, _, value = token.partition("=")
        if key == "kind":
            spec[key] = value
        elif key == "shape":
            spec[key] = [int(v) for v in value.split(",")]
        elif key == "return_sequences":
            spec[key] = value == "True"
        else:
            spec[key] = int(value)
    return spec


def save_model(model: Model, path):
    """Write the model (and its normalizer, if any) to a container file."""
    params = model.params()
    extras = {}
    if model.norm is not None:
        extras["norm.mean"] = np.asarray(model.norm.mean, dtype=np.float64)
        extras["norm.std"] = np.asarray(model.norm.std, dtype=np.float64)

    manifest = io.StringIO()
    manifest.write(f"{CONTAINER_MAGIC}\n")
    manifest.write(f"architecture={model.architecture}\n")
    manifest.write(f"input_dim={model.input_dim}\n")
    manifest.write(f"image_size={model.image_size}\n")
    manifest.write(f"seq_len={model.seq_len}\n")
    for spec in model.layer_specs():
        manifest.write(f"layer {_format_spec(spec)}\n")
    offset = 0
    payload = io.BytesIO()
    for section, tensors in (("param", params), ("extra", extras)):
        for name, arr in tensors.items():
            arr64 = np.ascontiguousarray(arr, dtype="<f8")
            shape = ",".join(str(s) for s in arr64.shape)
            manifest.write(f"{section} {name} f8 {offset} {arr64.size} {shape}\n")
            payload.write(arr64.tobytes())
            offset += arr64.nbytes
    manifest.write("DATA\n")
    Path(path).write_bytes(manifest.getvalue().encode("utf-8") + payload.getvalue())


def load_model(path) -> Model:
    """Reconstruct a model from a container file; bit-exact round trip."""
    raw = Path(path).read_bytes()
    marker = b"DATA\n"
    pos = raw.find(marker)
    if pos < 0:
        raise FormatError(f"{path}: missing DATA marker")
    header = raw[:pos].decode("utf-8").splitlines()
    payload = raw[pos + len(marker):]
    if not header or header[0] != CONTAINER_MAGIC:
        raise FormatError(f"{path}: not a model container")

    meta = {}
    specs = []
    tensors = []
    for line in header[1:]:
        if line.startswith("layer "):
            specs.append(_parse_spec(line[len("layer "):]))
        elif line.startswith(("param ", "extra ")):
            section, name, dtype, off, count, shape = line.split()
            if dtype != "f8":
                raise FormatError(f"{path}: unsupported dtype {dtype}")
            shape = tuple(int(s) for s in shape.split(",")) if shape != "" else ()
            tensors.append((section, name, int(off), int(count), shape))
        elif "=" in line:
            key, _, value = line.partition("=")
            meta[key] = value
        else:
            raise FormatError(f"{path}: unrecognized manifest line {line!r}")

    model = model_from_specs(
        meta.get("architecture", ""),
        specs,
        input_dim=int(meta.get("input_dim", 25)),
        image_size=int(meta.get("image_size", 68)),
        seq_len=int(meta.get("seq_len", 0)),
    )
    params = model.params()
    extras = {}
    for section, name, off, count, shape in tensors:
        end = off + 8 * count
        if end > len(payload):
            raise CorruptionError(
                f"{path}: payload truncated (need {end} bytes, have {len(payload)})"
            )
        arr = np.frombuffer(payload, dtype="<f8", count=count, offset=off).reshape(shape)
        if section == "param":
            if name not in params:
                raise CorruptionError(f"{path}: manifest tensor {name} not in architecture")
            if params[name].shape != arr.shape:
                raise CorruptionError(
                    f"{path}: tensor {name} shape {arr.shape} != expected {params[name].shape}"
                )
            params[name][...] = arr
        else:
            extras[name] = arr.astype(np.float64)
    expected_params = set(params)
    seen = {name for section, name, *_ in tensors if section == "param"}
    if seen != expected_params:
        missing = expected_params - seen
        raise CorruptionError(f"{path}: manifest missing tensors {sorted(missing)}")
    if "norm.mean" in extras and "norm.std" in extras:
        model.norm = NormStats(mean=extras["norm.mean"], std=extras["norm.std"])
    return model


def history_to_csv(history: TrainHistory, path):
    """Per-epoch loss table (epoch, train_mse, val_mse)."""
    lines = ["epoch,train_mse,val_mse"]
    for i, (tr, va) in enumerate(zip(history.train_loss, history.val_loss), start=1):
        lines.append(f"{i},{tr:.10g},{va:.10g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
