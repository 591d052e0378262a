"""Feed-forward network with two ReLU hidden layers and a sigmoid output.

Trained on binary cross-entropy with mini-batch gradient descent.  After each
epoch the full training loss is measured; if it went up, the epoch is undone
and the learning rate halved, so the recorded loss never increases.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class AnnConfig:
    hidden: tuple[int, int] = (32, 16)
    learning_rate: float = 0.01
    batch_size: int = 32
    epochs: int = 200
    seed: int = 0

    def __post_init__(self):
        if len(self.hidden) != 2 or min(self.hidden) < 1:
            raise ValueError("exactly two hidden layers of positive width are required")
        if not self.learning_rate > 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning_rate, batch_size and epochs must be positive")


@dataclass(frozen=True, eq=False)
class AnnModel:
    weights: tuple[np.ndarray, ...]
    biases: tuple[np.ndarray, ...]
    loss_history: np.ndarray = field(default_factory=lambda: np.zeros(0))
    config: AnnConfig = field(default_factory=AnnConfig)

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.weights[0].shape[0],) + tuple(w.shape[1] for w in self.weights)


def relu(x):
    return np.maximum(0.0, x)


def sigmoid(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _bce_from_logits(z, y):
    # log(1 + e^z) - y z, evaluated stably
    return np.mean(np.logaddexp(0.0, z) - y * z)


def init_params(sizes, rng: np.random.Generator):
    weights, biases = [], []
    for fan_in, fan_out in zip(sizes[:-1], sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, (fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def _forward(weights, biases, X):
    acts = [X]
    pre = []
    h = X
    for i, (W, b) in enumerate(zip(weights, biases)):
        z = h @ W + b
        pre.append(z)
        h = relu(z) if i < len(weights) - 1 else z
        acts.append(h)
    return pre, acts


def loss_and_grad(weights, biases, X, y):
    """Mean BCE of the network on (X, y) and its gradients by backpropagation."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    pre, acts = _forward(weights, biases, X)
    z = pre[-1][:, 0]
    loss = _bce_from_logits(z, y)
    delta = ((sigmoid(z) - y) / len(y))[:, None]
    gW = [None] * len(weights)
    gb = [None] * len(weights)
    for i in range(len(weights) - 1, -1, -1):
        gW[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i > 0:
            delta = (delta @ weights[i].T) * (pre[i - 1] > 0)
    return float(loss), gW, gb


def ann_train(X, y, config: AnnConfig | None = None) -> AnnModel:
    cfg = config or AnnConfig()
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64).ravel()
    if X.ndim != 2 or len(X) != len(y):
        raise ValueError("X must be (n, d) with one label per row")
    if not (np.any(y == 1) and np.any(y == 0)) or not np.all(np.isin(y, (0.0, 1.0))):
        raise ValueError("labels must be 0/1 with both classes present")
    rng = np.random.default_rng(cfg.seed)
    weights, biases = init_params((X.shape[1],) + tuple(cfg.hidden) + (1,), rng)
    n = len(y)
    lr = cfg.learning_rate

    def full_loss(ws, bs):
        z = _forward(ws, bs, X)[0][-1][:, 0]
        return float(_bce_from_logits(z, y))

    history = [full_loss(weights, biases)]
    for epoch in range(1, cfg.epochs + 1):
        saved = ([w.copy() for w in weights], [b.copy() for b in biases])
        order = rng.permutation(n)
        with np.errstate(over="ignore", invalid="ignore"):
            for s in range(0, n, cfg.batch_size):
                idx = order[s:s + cfg.batch_size]
                _, gW, gb = loss_and_grad(weights, biases, X[idx], y[idx])
                for i in range(len(weights)):
                    weights[i] -= lr * gW[i]
                    biases[i] -= lr * gb[i]
            loss = full_loss(weights, biases)
        if not np.isfinite(loss):
            raise DivergenceError(f"training loss became non-finite at epoch {epoch}")
        if loss > history[-1]:
            weights, biases = saved
            lr *= 0.5
            continue
        history.append(loss)
    return AnnModel(tuple(weights), tuple(biases), np.array(history), cfg)


def ann_predict_proba(model: AnnModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    if X.shape[1] != model.weights[0].shape[0]:
        raise ValueError(f"expected {model.weights[0].shape[0]} features, got {X.shape[1]}")
    z = _forward(model.weights, model.biases, X)[0][-1][:, 0]
    return sigmoid(z)


def ann_predict(model: AnnModel, X):
    """Probabilities and 0/1 labels thresholded at 0.5."""
    p = ann_predict_proba(model, X)
    return (p > 0.5).astype(np.int64), p
