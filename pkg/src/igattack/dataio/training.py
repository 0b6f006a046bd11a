"""Mini-batch Adam training of leaky-ReLU MLPs on cross-entropy."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .. import _pykernels as pk
from ..kernels import ACTIVATION_CODES
from ..nncore import Layer, Model, Standardization, predict
from ..optimnorm import AdamState, adam_step
from .datasets import Dataset


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True, eq=False)
class TrainResult:
    model: Model
    train_accuracy: float
    test_accuracy: float | None
    final_loss: float


def accuracy(model: Model, dataset: Dataset) -> float:
    if len(dataset) == 0:
        return float("nan")
    return float(np.mean(predict(model, dataset.features) == dataset.labels))


def _init_params(rng, dims):
    params = []
    for n_in, n_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / n_in)
        params.append([rng.uniform(-limit, limit, size=(n_out, n_in)), np.zeros(n_out)])
    return params


def _build(params, acts, slope, pre) -> Model:
    return Model(tuple(Layer(W, b, a, slope) for (W, b), a in zip(params, acts)), pre)


def _epoch(rng, Xs, y, params, states, codes, slope, batch, lr, epoch) -> float:
    loss = float("nan")
    order = rng.permutation(len(y))
    for start in range(0, len(y), batch):
        idx = order[start:start + batch]
        hs = [Xs[idx]]
        zs = []
        for (W, b), code in zip(params, codes):
            z = hs[-1] @ W.T + b
            zs.append(z)
            hs.append(pk._activate(z, code, slope))
        logits = hs[-1]
        shifted = logits - logits.max(axis=1, keepdims=True)
        logp = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        loss = float(-logp[np.arange(len(idx)), y[idx]].mean())
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}, batch starting {start} (lr={lr})")
        g = np.exp(logp)
        g[np.arange(len(idx)), y[idx]] -= 1.0
        g /= len(idx)
        for k in range(len(params) - 1, -1, -1):
            gz = pk._activation_vjp(zs[k], g, codes[k], slope)
            W, b = params[k]
            grads = (gz.T @ hs[k], gz.sum(axis=0))
            g = gz @ W
            for j in range(2):
                upd, states[k][j] = adam_step(states[k][j], grads[j], lr)
                params[k][j] = params[k][j] - upd
    return loss


def train_mlp(dataset: Dataset, layer_dims: Sequence[int], epochs: int = 20, lr: float = 1e-3,
              batch: int = 32, seed: int = 0, activation: str = "leaky_relu", slope: float = 0.01,
              test: Dataset | None = None, standardize: bool = True) -> TrainResult:
    """Train ``input -> layer_dims[0] -> ... -> layer_dims[-1]`` (the last entry is the class count).

    Standardization statistics come from ``dataset`` and are stored in the
    model, so the returned model takes raw ``[0, 1]`` features.
    """
    layer_dims = [int(d) for d in layer_dims]
    if not layer_dims or layer_dims[-1] != dataset.n_classes:
        raise ValueError(f"layer_dims must end with the class count {dataset.n_classes}")
    if epochs < 0 or batch < 1 or not lr > 0:
        raise ValueError("invalid training hyperparameters")
    rng = np.random.default_rng(seed)
    X = dataset.features
    y = dataset.labels
    pre = None
    if standardize:
        std = X.std(axis=0)
        pre = Standardization(X.mean(axis=0), np.where(std > 1e-12, std, 1.0))
        Xs = (X - pre.mean) / pre.std
    else:
        Xs = np.array(X)
    dims = [X.shape[1]] + layer_dims
    acts = [activation] * (len(layer_dims) - 1) + ["identity"]
    codes = [ACTIVATION_CODES[a] for a in acts]
    params = _init_params(rng, dims)
    states = [[AdamState(np.zeros_like(p), np.zeros_like(p)) for p in pair] for pair in params]

    loss = float("nan")
    # overflow surfaces as a non-finite loss, which _epoch reports with context
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(epochs):
            loss = _epoch(rng, Xs, y, params, states, codes, slope, batch, lr, epoch)

    model = _build(params, acts, slope, pre)
    train_acc = accuracy(model, dataset)
    test_acc = accuracy(model, test) if test is not None else None
    return TrainResult(model, train_acc, test_acc, loss)
