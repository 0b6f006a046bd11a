"""Feed-forward classifier: logits, predictions, and exact input gradients.

A :class:`Model` is an immutable stack of dense layers with an optional
standardization step folded in front, so callers always work in raw
``[0, 1]`` feature space.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import kernels


class ShapeError(ValueError):
    """Input or parameter dimensions do not line up."""


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    arr = np.array(a, dtype=np.float64, order="C", copy=True)
    if arr.ndim != ndim:
        raise ShapeError(f"{name} must be {ndim}-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} contains non-finite values")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Standardization:
    """Per-feature z-score applied before the first layer."""

    mean: np.ndarray
    std: np.ndarray

    def __post_init__(self):
        mean = _frozen(self.mean, 1, "mean")
        std = _frozen(self.std, 1, "std")
        if mean.shape != std.shape:
            raise ShapeError("mean and std lengths differ")
        if np.any(std <= 0):
            raise ValueError("every std entry must be > 0")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "std", std)


@dataclass(frozen=True, eq=False)
class Layer:
    weights: np.ndarray  # (out_dim, in_dim)
    biases: np.ndarray
    activation: str = "identity"
    slope: float = 0.01

    def __post_init__(self):
        W = _frozen(self.weights, 2, "weights")
        b = _frozen(self.biases, 1, "biases")
        if b.shape[0] != W.shape[0]:
            raise ShapeError(f"bias length {b.shape[0]} != out_dim {W.shape[0]}")
        if self.activation not in kernels.ACTIVATION_CODES:
            raise ValueError(f"unknown activation {self.activation!r}")
        if self.activation == "leaky_relu" and not self.slope > 0:
            raise ValueError("leaky_relu slope must be > 0")
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "biases", b)
        object.__setattr__(self, "slope", float(self.slope))

    @property
    def in_dim(self) -> int:
        return self.weights.shape[1]

    @property
    def out_dim(self) -> int:
        return self.weights.shape[0]


@dataclass(frozen=True, eq=False)
class Model:
    layers: tuple[Layer, ...]
    preprocessing: Standardization | None = None
    _packed: tuple = field(init=False, repr=False)

    def __post_init__(self):
        layers = tuple(self.layers)
        if not layers:
            raise ShapeError("a model needs at least one layer")
        for k in range(1, len(layers)):
            if layers[k].in_dim != layers[k - 1].out_dim:
                raise ShapeError(
                    f"layer {k} in_dim {layers[k].in_dim} != layer {k - 1} out_dim {layers[k - 1].out_dim}"
                )
        if layers[-1].activation != "identity":
            raise ValueError("final layer must emit logits (identity activation)")
        if self.preprocessing is not None and self.preprocessing.mean.shape[0] != layers[0].in_dim:
            raise ShapeError("preprocessing length does not match input_dim")
        object.__setattr__(self, "layers", layers)
        packed = tuple(
            (l.weights, l.biases, kernels.ACTIVATION_CODES[l.activation], l.slope) for l in layers
        )
        object.__setattr__(self, "_packed", packed)

    @property
    def input_dim(self) -> int:
        return self.layers[0].in_dim

    @property
    def num_classes(self) -> int:
        return self.layers[-1].out_dim

    def __getstate__(self):
        return {"layers": self.layers, "preprocessing": self.preprocessing}

    def __setstate__(self, state):
        object.__setattr__(self, "layers", state["layers"])
        object.__setattr__(self, "preprocessing", state["preprocessing"])
        self.__post_init__()


def _as_batch(model: Model, x) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != model.input_dim:
        raise ShapeError(f"expected input of length {model.input_dim}, got shape {np.shape(x)}")
    if model.preprocessing is not None:
        arr = (arr - model.preprocessing.mean) / model.preprocessing.std
    return np.ascontiguousarray(arr), single


def _check_class(model: Model, c) -> int:
    c = int(c)
    if not 0 <= c < model.num_classes:
        raise ValueError(f"class index {c} outside [0, {model.num_classes})")
    return c


def _input_chain(model: Model, g: np.ndarray) -> np.ndarray:
    if model.preprocessing is not None:
        g = g / model.preprocessing.std
    return g


def forward_logits(model: Model, x) -> np.ndarray:
    """Logits for one sample (1-D input) or a batch (2-D input)."""
    X, single = _as_batch(model, x)
    Z, _ = kernels.forward(model._packed, X)
    Z = np.asarray(Z)
    return Z[0] if single else Z


def softmax(z) -> np.ndarray:
    z = np.asarray(z, dtype=np.float64)
    e = np.exp(z - z.max(axis=-1, keepdims=True))
    return e / e.sum(axis=-1, keepdims=True)


def probabilities(model: Model, x) -> np.ndarray:
    return softmax(forward_logits(model, x))


def predict(model: Model, x):
    """Argmax class; ties go to the smallest index."""
    Z = forward_logits(model, x)
    if Z.ndim == 1:
        return int(np.argmax(Z))
    return np.argmax(Z, axis=1)


def logits_and_vjp(model: Model, x, cotangent) -> tuple[np.ndarray, np.ndarray]:
    """Return logits and the input-space pullback of ``cotangent``.

    ``cotangent`` is either an array shaped like the logits or a callable
    mapping the logits to one (used when the seed depends on the output).
    """
    X, single = _as_batch(model, x)
    Z, pre = kernels.forward(model._packed, X)
    Z = np.asarray(Z)
    if callable(cotangent):
        G = cotangent(Z[0] if single else Z)
    else:
        G = np.asarray(cotangent, dtype=np.float64)
    G = np.ascontiguousarray(np.broadcast_to(G, Z.shape), dtype=np.float64)
    g = _input_chain(model, np.asarray(kernels.backward(model._packed, pre, G)))
    if single:
        return Z[0], g[0]
    return Z, g


def input_gradient(model: Model, x, c) -> np.ndarray:
    """d Z_c / d x, through preprocessing and every layer."""
    c = _check_class(model, c)
    seed = np.zeros(model.num_classes)
    seed[c] = 1.0
    return logits_and_vjp(model, x, seed)[1]


def logit_jacobian(model: Model, x) -> tuple[np.ndarray, np.ndarray]:
    """Logits and the full ``(m, n)`` Jacobian at a single point."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("logit_jacobian takes a single sample")
    m = model.num_classes
    _, J = logits_and_vjp(model, np.repeat(x[None, :], m, axis=0), np.eye(m))
    # batched matmul may round differently from the single-row path; report the single-row logits
    return forward_logits(model, x), J


def loss_and_input_gradient(model: Model, x, y) -> tuple[float, np.ndarray]:
    """Cross-entropy of softmax(Z(x)) against ``y`` and its input gradient."""
    y = _check_class(model, y)

    def seed(Z):
        g = softmax(Z)
        g[..., y] -= 1.0
        return g

    Z, g = logits_and_vjp(model, x, seed)
    shifted = Z - Z.max(axis=-1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=-1))
    loss = log_norm - shifted[..., y]
    return (float(loss) if np.ndim(loss) == 0 else loss), g


def mlp(weights: Sequence, biases: Sequence, activation: str = "leaky_relu",
        slope: float = 0.01, preprocessing: Standardization | None = None) -> Model:
    """Build a model with one hidden activation and identity logits."""
    layers = []
    for k, (W, b) in enumerate(zip(weights, biases)):
        act = "identity" if k == len(weights) - 1 else activation
        layers.append(Layer(W, b, act, slope))
    return Model(tuple(layers), preprocessing)


def random_mlp(rng: np.random.Generator, dims: Sequence[int], activation: str = "leaky_relu",
               slope: float = 0.01, scale: float = 1.0) -> Model:
    """He-style random initialization; ``dims`` runs input -> ... -> classes."""
    weights, biases = [], []
    for n_in, n_out in zip(dims[:-1], dims[1:]):
        weights.append(rng.normal(0.0, scale * np.sqrt(2.0 / n_in), size=(n_out, n_in)))
        biases.append(rng.normal(0.0, 0.1 * scale, size=n_out))
    return mlp(weights, biases, activation, slope)
