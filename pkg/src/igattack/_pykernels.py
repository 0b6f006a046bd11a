"""Dense forward/backward sweeps in plain numpy.

Reference implementation of the kernel interface; ``_kernels.pyx`` mirrors it.
``layers`` is a sequence of ``(W, b, act_code, slope)`` with ``W`` shaped
``(out_dim, in_dim)``; ``X`` and ``G`` are C-contiguous float64 2-D arrays.
"""
import numpy as np

IDENTITY = 0
RELU = 1
LEAKY_RELU = 2
SOFTMAX = 3


def _softmax_rows(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def _activate(z, act, slope):
    if act == IDENTITY:
        return z
    if act == RELU:
        return np.where(z > 0.0, z, 0.0)
    if act == LEAKY_RELU:
        return np.where(z > 0.0, z, slope * z)
    if act == SOFTMAX:
        return _softmax_rows(z)
    raise ValueError(f"unknown activation code {act}")


def _activation_vjp(z, g, act, slope):
    if act == IDENTITY:
        return g
    if act == RELU:
        return np.where(z > 0.0, g, 0.0)
    if act == LEAKY_RELU:
        # derivative at exactly 0 taken from the positive side
        return np.where(z >= 0.0, g, slope * g)
    if act == SOFTMAX:
        s = _softmax_rows(z)
        return s * (g - (g * s).sum(axis=1, keepdims=True))
    raise ValueError(f"unknown activation code {act}")


def forward(layers, X):
    """Return ``(output, pre_activations)`` for a batch ``X``."""
    pre = []
    h = X
    for W, b, act, slope in layers:
        z = h @ W.T + b
        pre.append(z)
        h = _activate(z, act, slope)
    return np.ascontiguousarray(h), pre


def backward(layers, pre, G):
    """Pull the output cotangent ``G`` back to the network input."""
    g = G
    for (W, _b, act, slope), z in zip(reversed(layers), reversed(pre)):
        g = _activation_vjp(z, g, act, slope)
        g = g @ W
    return np.ascontiguousarray(g)
