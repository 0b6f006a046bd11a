"""Distances, proximal L1, box clipping, Adam, and the attack objective."""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .nncore import Model, ShapeError, logits_and_vjp

L0_THRESHOLD = 1e-6
L2_GUARD = 1e-12


def _pair(x, x2):
    a = np.asarray(x, dtype=np.float64)
    b = np.asarray(x2, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"length mismatch: {a.shape} vs {b.shape}")
    return a, b


def lp_distance(x, x2, p: int, tau: float = L0_THRESHOLD) -> float:
    """L0 (count of coordinates moved by more than ``tau``), L1, or L2 distance."""
    a, b = _pair(x, x2)
    d = np.abs(a - b)
    if p == 0:
        if not tau > 0:
            raise ValueError("L0 threshold must be > 0")
        return float(np.count_nonzero(d > tau))
    if p == 1:
        return float(d.sum())
    if p == 2:
        return float(np.sqrt(np.dot(d, d)))
    raise ValueError(f"unsupported norm p={p}")


def prox_l1(v, lam: float) -> np.ndarray:
    """Soft-thresholding: sign(v) * max(|v| - lam, 0)."""
    if lam < 0:
        raise ValueError("threshold must be non-negative")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - lam, 0.0)


def clip_box(v, lb, ub) -> np.ndarray:
    lb = np.asarray(lb, dtype=np.float64)
    ub = np.asarray(ub, dtype=np.float64)
    if np.any(lb > ub):
        raise ValueError("lower bound exceeds upper bound")
    return np.minimum(np.maximum(np.asarray(v, dtype=np.float64), lb), ub)


@dataclass(frozen=True, eq=False)
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def zeros(cls, n: int, **hyper) -> "AdamState":
        return cls(np.zeros(n), np.zeros(n), 0, **hyper)

    def __post_init__(self):
        if self.t < 0 or not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1) or not self.eps > 0:
            raise ValueError("invalid Adam hyperparameters")
        if np.shape(self.m) != np.shape(self.v):
            raise ShapeError("moment vectors differ in length")


def adam_step(state: AdamState, grad, lr: float) -> tuple[np.ndarray, AdamState]:
    """One bias-corrected Adam step; the caller subtracts the returned update."""
    g = np.asarray(grad, dtype=np.float64)
    if g.shape != state.m.shape:
        raise ShapeError(f"gradient length {g.shape} != state length {state.m.shape}")
    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * g
    v = state.beta2 * state.v + (1.0 - state.beta2) * (g * g)
    m_hat = m / (1.0 - state.beta1 ** t)
    v_hat = v / (1.0 - state.beta2 ** t)
    update = lr * m_hat / (np.sqrt(v_hat) + state.eps)
    return update, replace(state, m=m, v=v, t=t)


@dataclass(frozen=True)
class ObjectiveConfig:
    c: float = 0.1
    norm: int = 2
    lam: float = 0.01

    def __post_init__(self):
        if not self.c > 0:
            raise ValueError("c must be > 0")
        if self.lam < 0:
            raise ValueError("lambda must be >= 0")
        if self.norm not in (1, 2):
            raise ValueError("objective norm must be 1 or 2; L0 is enforced by masking")


def attack_objective(model: Model, x_adv, x, y: int, cfg: ObjectiveConfig) -> tuple[float, np.ndarray]:
    """Value ``Z_y(x_adv) + c * L_p(x, x_adv)`` and its gradient in ``x_adv``.

    For ``norm=1`` the returned gradient covers the logit term only; the L1
    term is handled by soft-thresholding the perturbation after each step.
    """
    x_adv, x = _pair(x_adv, x)
    if cfg.norm not in (1, 2):
        raise ValueError("objective norm must be 1 or 2")
    y = int(y)
    seed = np.zeros(model.num_classes)
    seed[y] = 1.0
    Z, grad = logits_and_vjp(model, x_adv, seed)
    diff = x_adv - x
    if cfg.norm == 2:
        dist = float(np.sqrt(np.dot(diff, diff)))
        if dist >= L2_GUARD:
            grad = grad + cfg.c * diff / dist
    else:
        dist = float(np.abs(diff).sum())
    return float(Z[y]) + cfg.c * dist, grad
