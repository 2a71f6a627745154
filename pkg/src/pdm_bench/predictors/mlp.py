"""Feed-forward network with ReLU hidden layers, a sigmoid output and Adam.

The training step is functional: :func:`mlp_train_step` returns a new state
and leaves its input untouched, which keeps gradient checks and replays easy.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import numpy as np

from .scaling import Standardizer

BETA1, BETA2, EPS = 0.9, 0.999, 1e-8


def _sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass
class MLPState:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    m: list[np.ndarray]  # Adam first moments, weights then biases
    v: list[np.ndarray]
    t: int = 0
    lr: float = 1e-3
    dropout: tuple[float, ...] = ()  # per hidden layer
    loss: str = "bce"
    rng: np.random.Generator = field(default_factory=lambda: np.random.default_rng(0))

    @property
    def params(self) -> list[np.ndarray]:
        return self.weights + self.biases

    def copy(self) -> "MLPState":
        rng = np.random.default_rng()
        rng.bit_generator.state = self.rng.bit_generator.state
        return dataclasses.replace(
            self,
            weights=[w.copy() for w in self.weights], biases=[b.copy() for b in self.biases],
            m=[a.copy() for a in self.m], v=[a.copy() for a in self.v], rng=rng)


def init_state(n_in: int, hidden=(128, 64, 128), dropout_last: int = 2, rate: float = 0.25,
               lr: float = 1e-3, loss: str = "bce", seed: int = 0) -> MLPState:
    """He-initialized weights; dropout ``rate`` on the last ``dropout_last`` hidden layers."""
    if loss not in ("bce", "mse"):
        raise ValueError(f"unknown loss {loss!r}")
    rng = np.random.default_rng(seed)
    sizes = [n_in, *hidden, 1]
    weights, biases = [], []
    for a, b in zip(sizes[:-1], sizes[1:]):
        weights.append(rng.normal(0.0, np.sqrt(2.0 / a), (a, b)))
        biases.append(np.zeros(b))
    drops = tuple(rate if i >= len(hidden) - dropout_last else 0.0 for i in range(len(hidden)))
    params = weights + biases
    return MLPState(weights, biases, [np.zeros_like(p) for p in params],
                    [np.zeros_like(p) for p in params], 0, lr, drops, loss, rng)


def forward(weights, biases, X, masks=None):
    """Return the output logits and the per-layer activations."""
    acts = [X]
    h = X
    n_hidden = len(weights) - 1
    for i in range(n_hidden):
        h = np.maximum(h @ weights[i] + biases[i], 0.0)
        if masks is not None and masks[i] is not None:
            h = h * masks[i]
        acts.append(h)
    z = (h @ weights[-1] + biases[-1])[:, 0]
    return z, acts


def loss_and_grads(weights, biases, X, y, loss: str = "bce", masks=None):
    """Mean batch loss and its gradients (weights list, biases list)."""
    z, acts = forward(weights, biases, X, masks)
    n = len(y)
    p = _sigmoid(z)
    if loss == "bce":
        # log(1 + e^z) - y z, stable for large |z|
        value = float(np.mean(np.logaddexp(0.0, z) - y * z))
        dz = (p - y) / n
    else:
        value = float(np.mean((p - y) ** 2))
        dz = 2.0 * (p - y) * p * (1.0 - p) / n
    gw = [None] * len(weights)
    gb = [None] * len(biases)
    delta = dz[:, None]
    for i in range(len(weights) - 1, -1, -1):
        gw[i] = acts[i].T @ delta
        gb[i] = delta.sum(axis=0)
        if i:
            delta = delta @ weights[i].T
            # acts[i] is post-ReLU and post-mask; zero entries block the gradient
            # and surviving entries carry the inverted-dropout scale.
            if masks is not None and masks[i - 1] is not None:
                delta = delta * masks[i - 1] * (acts[i] > 0)
            else:
                delta = delta * (acts[i] > 0)
    return value, gw, gb


def _draw_masks(state: MLPState, n: int):
    masks = []
    for i, rate in enumerate(state.dropout):
        if rate <= 0:
            masks.append(None)
            continue
        width = state.weights[i].shape[1]
        keep = state.rng.random((n, width)) >= rate
        masks.append(keep / (1.0 - rate))
    return masks


def _step_inplace(state: MLPState, X, y) -> float:
    masks = _draw_masks(state, len(y))
    value, gw, gb = loss_and_grads(state.weights, state.biases, X, y, state.loss, masks)
    if not np.isfinite(value):
        raise FloatingPointError(f"non-finite training loss at step {state.t + 1}")
    state.t += 1
    c1 = 1.0 - BETA1 ** state.t
    c2 = 1.0 - BETA2 ** state.t
    for p, g, m, v in zip(state.params, gw + gb, state.m, state.v):
        m *= BETA1
        m += (1.0 - BETA1) * g
        v *= BETA2
        v += (1.0 - BETA2) * g * g
        p -= state.lr * (m / c1) / (np.sqrt(v / c2) + EPS)
    return value


def mlp_train_step(state: MLPState, batch) -> MLPState:
    """One Adam update on ``batch = (X, y)``; returns a new state."""
    X, y = batch
    new = state.copy()
    _step_inplace(new, np.asarray(X, dtype=float), np.asarray(y, dtype=float))
    return new


@dataclass
class MLP:
    scaler: Standardizer
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    history: list[float]

    @classmethod
    def fit(cls, X, y, hidden=(128, 64, 128), epochs: int = 150, batch: int = 32,
            lr: float = 1e-3, loss: str = "bce", seed: int = 0) -> "MLP":
        scaler = Standardizer.fit(X)
        Xs = scaler.transform(X)
        y = np.asarray(y, dtype=float)
        state = init_state(Xs.shape[1], hidden, lr=lr, loss=loss, seed=seed)
        order_rng = np.random.default_rng(seed + 1)
        history = []
        n = len(y)
        for _ in range(epochs):
            perm = order_rng.permutation(n)
            total = 0.0
            for lo in range(0, n, batch):
                idx = perm[lo:lo + batch]
                total += _step_inplace(state, Xs[idx], y[idx]) * len(idx)
            history.append(total / n)
        return cls(scaler, state.weights, state.biases, history)

    def predict(self, X) -> np.ndarray:
        z, _ = forward(self.weights, self.biases, self.scaler.transform(X))
        return _sigmoid(z)
