"""The few-shot head: an MLP on frozen features, trained with Adam.

The head has one ReLU hidden layer (or none when ``hidden_size`` is 0)
followed by a softmax.  Training is full batch: support sets are tiny, so
batching would only add a free parameter.  The loss is

    mean cross-entropy  +  l2_lambda * (||W1||_F^2 + ||W2||_F^2)

with biases unpenalized.  Weights start Glorot-uniform from an explicit
seed and every operation is in float64, so runs are exactly repeatable and
gradients can be checked against finite differences.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field, replace

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.exceptions import NotFittedError

from .errors import (
    DegenerateInput,
    LabelOutOfRange,
    NonFiniteInput,
    ShapeMismatch,
)
from .rng import SplitMix64

HEAD_MAGIC = b"FSBH"
HEAD_VERSION = 1


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters of one head training run."""

    learning_rate: float = 5e-4
    epochs: int = 100
    hidden_size: int = 1024  # 0 drops the hidden layer
    l2_lambda: float = 0.1
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ValueError(f"learning_rate must be > 0, got {self.learning_rate}")
        if self.epochs < 1:
            raise ValueError(f"epochs must be >= 1, got {self.epochs}")
        if self.hidden_size < 0 or self.l2_lambda < 0:
            raise ValueError("hidden_size and l2_lambda must be >= 0")

    def with_seed(self, seed: int) -> "TrainConfig":
        return replace(self, seed=seed)


@dataclass
class HeadModel:
    """Trained head weights.  W1/b1 are None when there is no hidden layer."""

    W1: np.ndarray | None
    b1: np.ndarray | None
    W2: np.ndarray
    b2: np.ndarray

    @property
    def input_dim(self) -> int:
        return self.W1.shape[1] if self.W1 is not None else self.W2.shape[1]

    @property
    def hidden_size(self) -> int:
        return self.W1.shape[0] if self.W1 is not None else 0

    @property
    def ways(self) -> int:
        return self.W2.shape[0]

    def params(self) -> dict:
        out = {"W2": self.W2, "b2": self.b2}
        if self.W1 is not None:
            out["W1"] = self.W1
            out["b1"] = self.b1
        return out


@dataclass(frozen=True)
class TrainTrace:
    per_epoch_loss: tuple


def softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with max subtraction; accepts a vector or a matrix."""
    logits = np.asarray(logits, dtype=np.float64)
    if not np.isfinite(logits).all():
        raise NonFiniteInput("softmax input contains NaN or Inf")
    shifted = logits - logits.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _log_softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def _check_xy(X: np.ndarray, y: np.ndarray, ways: int) -> tuple:
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2:
        raise ShapeMismatch(f"X must be 2-D, got shape {X.shape}")
    if y.shape != (X.shape[0],):
        raise ShapeMismatch(f"{X.shape[0]} rows but {y.shape} labels")
    if y.size and (y.min() < 0 or y.max() >= ways):
        bad = y[(y < 0) | (y >= ways)][0]
        raise LabelOutOfRange(int(bad), ways)
    return X, y


def loss_and_grad(model: HeadModel, X, y, l2_lambda: float) -> tuple:
    """Loss and exact analytic gradients, keyed like ``model.params()``."""
    X, y = _check_xy(X, y, model.ways)
    if X.shape[1] != model.input_dim:
        raise ShapeMismatch(
            f"X has {X.shape[1]} features, model expects {model.input_dim}"
        )
    n = X.shape[0]
    if model.W1 is not None:
        pre = X @ model.W1.T + model.b1
        hidden = np.maximum(pre, 0.0)
    else:
        hidden = X
    logits = hidden @ model.W2.T + model.b2
    logp = _log_softmax(logits)
    ce = -logp[np.arange(n), y].mean()
    penalty = float(np.sum(model.W2**2))
    if model.W1 is not None:
        penalty += float(np.sum(model.W1**2))
    loss = ce + l2_lambda * penalty

    dlogits = (np.exp(logp) - _one_hot(y, model.ways)) / n
    grads = {
        "W2": dlogits.T @ hidden + 2.0 * l2_lambda * model.W2,
        "b2": dlogits.sum(axis=0),
    }
    if model.W1 is not None:
        dhidden = (dlogits @ model.W2) * (pre > 0.0)
        grads["W1"] = dhidden.T @ X + 2.0 * l2_lambda * model.W1
        grads["b1"] = dhidden.sum(axis=0)
    return loss, grads


def _one_hot(y: np.ndarray, ways: int) -> np.ndarray:
    out = np.zeros((y.size, ways))
    out[np.arange(y.size), y] = 1.0
    return out


@dataclass
class AdamState:
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)


def adam_step(model: HeadModel, grads: dict, state: AdamState, config: TrainConfig, t: int):
    """One Adam update with bias correction; mutates model arrays in place."""
    if t < 1:
        raise ValueError(f"step index must be >= 1, got {t}")
    b1, b2, eps = config.adam_beta1, config.adam_beta2, config.adam_eps
    for name, param in model.params().items():
        g = grads[name]
        if g.shape != param.shape:
            raise ShapeMismatch(f"gradient {name} has shape {g.shape}, want {param.shape}")
        if name not in state.m:
            state.m[name] = np.zeros_like(param)
            state.v[name] = np.zeros_like(param)
        state.m[name] = b1 * state.m[name] + (1 - b1) * g
        state.v[name] = b2 * state.v[name] + (1 - b2) * g * g
        m_hat = state.m[name] / (1 - b1**t)
        v_hat = state.v[name] / (1 - b2**t)
        param -= config.learning_rate * m_hat / (np.sqrt(v_hat) + eps)
    return model, state


def _glorot(stream: SplitMix64, rows: int, cols: int) -> np.ndarray:
    limit = np.sqrt(6.0 / (rows + cols))
    return (stream.fill_uniform((rows, cols)) * 2.0 - 1.0) * limit


def init_head(input_dim: int, ways: int, config: TrainConfig) -> HeadModel:
    """Glorot-uniform weights from the config seed, zero biases.

    W1 is drawn before W2 from a single SplitMix64 stream, so the full
    initialization is one deterministic function of (shapes, seed).
    """
    stream = SplitMix64(config.seed)
    if config.hidden_size > 0:
        W1 = _glorot(stream, config.hidden_size, input_dim)
        b1 = np.zeros(config.hidden_size)
        W2 = _glorot(stream, ways, config.hidden_size)
    else:
        W1, b1 = None, None
        W2 = _glorot(stream, ways, input_dim)
    return HeadModel(W1=W1, b1=b1, W2=W2, b2=np.zeros(ways))


def train_head(X, y, ways: int, config: TrainConfig) -> tuple:
    """Train a head on a support set; returns (HeadModel, TrainTrace)."""
    X, y = _check_xy(X, y, ways)
    if X.shape[0] == 0:
        raise ShapeMismatch("support set is empty")
    present = np.unique(y)
    if present.size != ways:
        missing = int(np.setdiff1d(np.arange(ways), present)[0])
        raise DegenerateInput(missing)
    model = init_head(X.shape[1], ways, config)
    state = AdamState()
    losses = []
    for t in range(1, config.epochs + 1):
        loss, grads = loss_and_grad(model, X, y, config.l2_lambda)
        model, state = adam_step(model, grads, state, config, t)
        losses.append(loss)
    return model, TrainTrace(per_epoch_loss=tuple(losses))


def predict_proba(model: HeadModel, X) -> np.ndarray:
    """Class probabilities per query row; argmax is the predicted label."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.input_dim:
        raise ShapeMismatch(
            f"X has shape {X.shape}, model expects (*, {model.input_dim})"
        )
    if model.W1 is not None:
        X = np.maximum(X @ model.W1.T + model.b1, 0.0)
    return softmax(X @ model.W2.T + model.b2)


def predict(model: HeadModel, X) -> np.ndarray:
    return np.argmax(predict_proba(model, X), axis=1)


def save_head(path, model: HeadModel) -> None:
    """Serialize a head to a versioned little-endian binary."""
    with open(path, "wb") as f:
        f.write(
            struct.pack(
                "<4sIIII",
                HEAD_MAGIC,
                HEAD_VERSION,
                model.input_dim,
                model.hidden_size,
                model.ways,
            )
        )
        if model.W1 is not None:
            f.write(np.ascontiguousarray(model.W1, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(model.b1, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(model.W2, dtype="<f8").tobytes())
        f.write(np.ascontiguousarray(model.b2, dtype="<f8").tobytes())


def load_head(path) -> HeadModel:
    with open(path, "rb") as f:
        raw = f.read()
    magic, version, input_dim, hidden, ways = struct.unpack_from("<4sIIII", raw)
    if magic != HEAD_MAGIC:
        raise ValueError(f"{path}: bad head magic {magic!r}")
    if version != HEAD_VERSION:
        raise ValueError(f"{path}: unsupported head version {version}")
    offset = struct.calcsize("<4sIIII")

    def take(count, shape):
        nonlocal offset
        arr = np.frombuffer(raw, dtype="<f8", count=count, offset=offset)
        offset += 8 * count
        return arr.reshape(shape).copy()

    if hidden > 0:
        W1 = take(hidden * input_dim, (hidden, input_dim))
        b1 = take(hidden, (hidden,))
    else:
        W1, b1 = None, None
    W2 = take(ways * (hidden or input_dim), (ways, hidden or input_dim))
    b2 = take(ways, (ways,))
    return HeadModel(W1=W1, b1=b1, W2=W2, b2=b2)


class HeadClassifier(BaseEstimator, ClassifierMixin):
    """Scikit-learn estimator facade over :func:`train_head`.

    Accepts arbitrary hashable labels; they are encoded to [0, ways) in
    sorted order and decoded on predict.
    """

    def __init__(
        self,
        learning_rate: float = 5e-4,
        epochs: int = 100,
        hidden_size: int = 1024,
        l2_lambda: float = 0.1,
        seed: int = 0,
    ):
        self.learning_rate = learning_rate
        self.epochs = epochs
        self.hidden_size = hidden_size
        self.l2_lambda = l2_lambda
        self.seed = seed

    def _config(self) -> TrainConfig:
        return TrainConfig(
            learning_rate=self.learning_rate,
            epochs=self.epochs,
            hidden_size=self.hidden_size,
            l2_lambda=self.l2_lambda,
            seed=self.seed,
        )

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_, encoded = np.unique(y, return_inverse=True)
        if self.classes_.size < 2:
            raise DegenerateInput(0)
        self.model_, self.trace_ = train_head(
            X, encoded, self.classes_.size, self._config()
        )
        return self

    def _fitted_model(self) -> HeadModel:
        if not hasattr(self, "model_"):
            raise NotFittedError("call fit before predict")
        return self.model_

    def predict_proba(self, X) -> np.ndarray:
        return predict_proba(self._fitted_model(), X)

    def predict(self, X) -> np.ndarray:
        model = self._fitted_model()
        return self.classes_[predict(model, X)]
