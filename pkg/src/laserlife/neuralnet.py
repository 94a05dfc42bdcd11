"""Feed-forward MLP regressor with hand-written backpropagation and Adam."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .datagen import (
    Dataset,
    NormStats,
    apply_norm,
    fit_norm,
    invert_norm,
    normalize_features,
    split_indices,
)

log = logging.getLogger(__name__)


class DivergedTrainingError(RuntimeError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss})")
        self.epoch = epoch


class ModelFormatError(ValueError):
    pass


def _tanh(z):
    return np.tanh(z)


def _tanh_grad(z, a):
    return 1.0 - a * a


def _relu(z):
    return np.maximum(z, 0.0)


def _relu_grad(z, a):
    return (z > 0).astype(z.dtype)


def _sigmoid(z):
    return 1.0 / (1.0 + np.exp(-z))


def _sigmoid_grad(z, a):
    return a * (1.0 - a)


ACTIVATIONS = {
    "tanh": (_tanh, _tanh_grad),
    "relu": (_relu, _relu_grad),
    "sigmoid": (_sigmoid, _sigmoid_grad),
}


@dataclass(frozen=True)
class MlpConfig:
    layer_sizes: tuple[int, ...] = (7, 16, 16, 1)
    activation: str = "tanh"
    seed: int = 0
    init_scale: float = 1.0

    def validate(self) -> "MlpConfig":
        sizes = tuple(self.layer_sizes)
        if len(sizes) < 2 or any(int(s) != s or s < 1 for s in sizes):
            raise ValueError(f"layer_sizes must be >= 2 positive integers, got {sizes}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(
                f"unknown activation {self.activation!r}; choose from {sorted(ACTIVATIONS)}"
            )
        if not self.init_scale >= 0:
            raise ValueError(f"init_scale must be >= 0, got {self.init_scale}")
        return self


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 3e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    epochs: int = 600
    batch_size: int = 32
    seed: int = 0
    val_fraction: float = 0.2
    # cosine decay to learning_rate * final_lr_fraction; 1.0 keeps it constant
    final_lr_fraction: float = 0.01

    def validate(self) -> "TrainConfig":
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in (0, 1)")
        if not self.epsilon > 0:
            raise ValueError("epsilon must be > 0")
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be > 0")
        if self.epochs < 0 or self.batch_size < 1:
            raise ValueError("epochs must be >= 0 and batch_size >= 1")
        if not 0 < self.final_lr_fraction <= 1:
            raise ValueError("final_lr_fraction must be in (0, 1]")
        return self

    def lr_at(self, epoch: int) -> float:
        if self.epochs <= 1 or self.final_lr_fraction == 1.0:
            return self.learning_rate
        frac = epoch / (self.epochs - 1)
        lo = self.learning_rate * self.final_lr_fraction
        return lo + 0.5 * (self.learning_rate - lo) * (1.0 + math.cos(math.pi * frac))


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # weights[k] has shape (fan_in, fan_out)
    biases: list[np.ndarray]
    activation: str = "tanh"
    norm: NormStats | None = None
    trained_epochs: int = 0

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def params(self) -> list[np.ndarray]:
        """Parameters interleaved as [W0, b0, W1, b1, ...] (views, not copies)."""
        out = []
        for w, b in zip(self.weights, self.biases):
            out.extend((w, b))
        return out

    def copy(self) -> "MlpModel":
        return MlpModel(
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
            self.norm,
            self.trained_epochs,
        )


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    t: int = 0

    @classmethod
    def zeros_like(cls, model: MlpModel) -> "AdamState":
        return cls([np.zeros_like(p) for p in model.params()], [np.zeros_like(p) for p in model.params()])


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    train_index: np.ndarray | None = None
    val_index: np.ndarray | None = None

    @property
    def best_epoch(self) -> int:
        return int(np.argmin(self.val_loss)) + 1 if self.val_loss else 0


def init_model(config: MlpConfig = MlpConfig()) -> MlpModel:
    config.validate()
    rng = np.random.Generator(np.random.PCG64(config.seed))
    sizes = tuple(int(s) for s in config.layer_sizes)
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        w = rng.standard_normal((fan_in, fan_out)) * (config.init_scale / math.sqrt(fan_in))
        weights.append(w)
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases, config.activation)


def _as_batch(model: MlpModel, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X[None, :]
    n_in = model.layer_sizes[0]
    if X.ndim != 2 or X.shape[1] != n_in:
        raise ValueError(f"expected {n_in} input features, got shape {X.shape}")
    return X


def _forward_cache(model: MlpModel, X: np.ndarray):
    act, _ = ACTIVATIONS[model.activation]
    pre, post = [], [X]
    a = X
    last = len(model.weights) - 1
    for k, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = a @ w + b
        a = z if k == last else act(z)
        pre.append(z)
        post.append(a)
    return pre, post


def forward(model: MlpModel, features) -> np.ndarray:
    """Predictions on the normalized target scale, shape ``(n,)`` for 1 output."""
    X = _as_batch(model, features)
    _, post = _forward_cache(model, X)
    out = post[-1]
    return out[:, 0] if out.shape[1] == 1 else out


def loss_and_gradients(model: MlpModel, X, y) -> tuple[float, list[np.ndarray]]:
    """Mean squared error over the batch and its gradient for every parameter.

    Gradients are returned in the same interleaved order as ``model.params()``.
    """
    X = _as_batch(model, X)
    y = np.asarray(y, dtype=np.float64).reshape(X.shape[0], -1)
    if X.shape[0] == 0:
        raise ValueError("empty batch")
    if y.shape[1] != model.layer_sizes[-1]:
        raise ValueError(f"target width {y.shape[1]} != output size {model.layer_sizes[-1]}")
    _, dact = ACTIVATIONS[model.activation]
    pre, post = _forward_cache(model, X)
    n = X.shape[0]
    resid = post[-1] - y
    loss = float(np.mean(resid * resid))

    grads: list[np.ndarray] = [None] * (2 * len(model.weights))  # type: ignore[list-item]
    delta = (2.0 / resid.size) * resid
    for k in range(len(model.weights) - 1, -1, -1):
        grads[2 * k] = post[k].T @ delta
        grads[2 * k + 1] = delta.sum(axis=0)
        if k > 0:
            delta = (delta @ model.weights[k].T) * dact(pre[k - 1], post[k])
    return loss, grads


def adam_update(
    model: MlpModel,
    grads: list[np.ndarray],
    state: AdamState,
    cfg: TrainConfig,
    lr: float | None = None,
) -> tuple[MlpModel, AdamState]:
    """One bias-corrected Adam step, applied in place; returns (model, state)."""
    lr = cfg.learning_rate if lr is None else lr
    state.t += 1
    b1, b2 = cfg.beta1, cfg.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    for p, g, m, v in zip(model.params(), grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * g * g
        p -= lr * (m / c1) / (np.sqrt(v / c2) + cfg.epsilon)
    return model, state


def train(
    dataset: Dataset,
    mlp_cfg: MlpConfig = MlpConfig(),
    train_cfg: TrainConfig = TrainConfig(),
) -> tuple[MlpModel, TrainHistory]:
    """Fit an MLP on a seeded train/validation split of ``dataset``.

    Normalization statistics come from the training split only.  Loss values
    in the history are on the normalized target scale.
    """
    train_cfg.validate()
    if len(dataset) < 2:
        raise ValueError(f"need at least 2 rows to train, got {len(dataset)}")
    tr_idx, va_idx = split_indices(len(dataset), train_cfg.val_fraction, train_cfg.seed)
    train_ds = dataset.subset(tr_idx)
    stats = fit_norm(train_ds)
    Xtr, ytr = apply_norm(train_ds, stats)
    Xva, yva = apply_norm(dataset.subset(va_idx), stats)

    model = init_model(mlp_cfg)
    model.norm = stats
    state = AdamState.zeros_like(model)
    history = TrainHistory(train_index=tr_idx, val_index=va_idx)
    rng = np.random.Generator(np.random.PCG64(train_cfg.seed + 1))
    n = Xtr.shape[0]
    bs = train_cfg.batch_size

    for epoch in range(train_cfg.epochs):
        lr = train_cfg.lr_at(epoch)
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, bs):
            idx = order[start:start + bs]
            loss, grads = loss_and_gradients(model, Xtr[idx], ytr[idx])
            if not math.isfinite(loss):
                raise DivergedTrainingError(epoch + 1, loss)
            total += loss * idx.size
            adam_update(model, grads, state, train_cfg, lr)
        val = float(np.mean((forward(model, Xva) - yva) ** 2))
        if not math.isfinite(val):
            raise DivergedTrainingError(epoch + 1, val)
        history.train_loss.append(total / n)
        history.val_loss.append(val)
        model.trained_epochs = epoch + 1
        if (epoch + 1) % 100 == 0:
            log.debug("epoch %d train %.3e val %.3e", epoch + 1, total / n, val)
    return model, history


def predict(model: MlpModel, raw_features) -> np.ndarray:
    """MTTF in years for raw (unnormalized) feature rows."""
    if model.norm is None:
        raise ValueError("model carries no normalization statistics")
    X = normalize_features(_as_batch(model, raw_features), model.norm)
    return invert_norm(forward(model, X), model.norm)


def predict_dataset(model: MlpModel, dataset: Dataset) -> np.ndarray:
    return predict(model, dataset.features)


# -- serialization ----------------------------------------------------------


def to_dict(model: MlpModel) -> dict:
    return {
        "layer_sizes": list(model.layer_sizes),
        "activation": model.activation,
        "weights": [[float(x) for x in w.ravel(order="C")] for w in model.weights],
        "biases": [[float(x) for x in b] for b in model.biases],
        "norm": model.norm.to_dict() if model.norm is not None else None,
        "trained_epochs": model.trained_epochs,
    }


def from_dict(doc: dict) -> MlpModel:
    try:
        sizes = [int(s) for s in doc["layer_sizes"]]
        weights, biases = [], []
        if len(doc["weights"]) != len(sizes) - 1 or len(doc["biases"]) != len(sizes) - 1:
            raise ModelFormatError("layer count does not match layer_sizes")
        for k, (fan_in, fan_out) in enumerate(zip(sizes[:-1], sizes[1:])):
            w = np.array(doc["weights"][k], dtype=np.float64)
            b = np.array(doc["biases"][k], dtype=np.float64)
            if w.size != fan_in * fan_out or b.shape != (fan_out,):
                raise ModelFormatError(
                    f"layer {k}: expected {fan_in}x{fan_out} weights and {fan_out} biases"
                )
            weights.append(w.reshape(fan_in, fan_out))
            biases.append(b)
        activation = doc["activation"]
        if activation not in ACTIVATIONS:
            raise ModelFormatError(f"unknown activation {activation!r}")
        norm = NormStats.from_dict(doc["norm"]) if doc.get("norm") else None
        if norm is not None and len(norm.feature_mean) != sizes[0]:
            raise ModelFormatError("normalization width does not match input layer")
        model = MlpModel(weights, biases, activation, norm, int(doc.get("trained_epochs", 0)))
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, ModelFormatError):
            raise
        raise ModelFormatError(f"corrupt model document: {exc}") from exc
    if not all(np.all(np.isfinite(p)) for p in model.params()):
        raise ModelFormatError("model contains non-finite parameters")
    return model


def save(model: MlpModel, path: str | Path) -> None:
    with open(path, "w") as fh:
        json.dump(to_dict(model), fh)
        fh.write("\n")


def load(path: str | Path) -> MlpModel:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ModelFormatError(f"{path}: not valid JSON ({exc})") from exc
    return from_dict(doc)
