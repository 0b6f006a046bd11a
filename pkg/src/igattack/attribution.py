"""Integrated-gradient attribution and attribution-ranked point selection."""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .nncore import Model, ShapeError, logits_and_vjp

# gradient evaluations per backward sweep when walking the path
_CHUNK = 4096


@dataclass(frozen=True, eq=False)
class AttributionMap:
    values: np.ndarray
    target_class: int
    steps: int
    baseline: np.ndarray


def integrated_gradient(model: Model, x, baseline, c: int, steps: int) -> AttributionMap:
    """Right Riemann sum of the path gradient of logit ``c`` from ``baseline`` to ``x``.

    Samples the path at ``j / steps`` for ``j = 1 .. steps`` (the endpoint
    ``x`` is included, the baseline itself is not).
    """
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    steps = int(steps)
    x = np.asarray(x, dtype=np.float64)
    baseline = np.asarray(baseline, dtype=np.float64)
    if x.shape != baseline.shape or x.ndim != 1:
        raise ShapeError(f"x {x.shape} and baseline {baseline.shape} must be equal-length vectors")
    if not 0 <= int(c) < model.num_classes:
        raise ValueError(f"class index {c} outside [0, {model.num_classes})")
    seed = np.zeros(model.num_classes)
    seed[int(c)] = 1.0
    delta = x - baseline
    total = np.zeros_like(x)
    for start in range(1, steps + 1, _CHUNK):
        j = np.arange(start, min(start + _CHUNK, steps + 1), dtype=np.float64)
        path = baseline + (j / steps)[:, None] * delta
        _, grads = logits_and_vjp(model, path, seed)
        total += grads.sum(axis=0)
    return AttributionMap(delta * total / steps, int(c), steps, baseline.copy())


def _values(attr) -> np.ndarray:
    return np.asarray(attr.values if isinstance(attr, AttributionMap) else attr, dtype=np.float64)


def sort_desc(attr) -> np.ndarray:
    """Indices ordered by signed attribution, largest first; ties keep index order."""
    v = _values(attr)
    # stable sort on the negated values gives descending order with index tie-break
    return np.argsort(-v, kind="stable")


def top_index(attr, points: int) -> np.ndarray:
    if points < 1:
        raise ValueError("points must be >= 1")
    v = _values(attr)
    if points > v.shape[0]:
        warnings.warn(f"requested {points} points but only {v.shape[0]} exist; using all", stacklevel=2)
        points = v.shape[0]
    return sort_desc(v)[:points]


def mask_from_indices(indices, n: int) -> np.ndarray:
    idx = np.asarray(indices, dtype=np.int64).reshape(-1)
    if idx.size and (idx.min() < 0 or idx.max() >= n):
        raise IndexError(f"indices must lie in [0, {n})")
    if np.unique(idx).size != idx.size:
        raise ValueError("duplicate indices in mask request")
    mask = np.zeros(n, dtype=np.float64)
    mask[idx] = 1.0
    return mask
