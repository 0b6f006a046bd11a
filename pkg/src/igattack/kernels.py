"""Kernel backend selection.

The compiled ``_kernels`` extension is used when it imports; setting
``IGATTACK_PURE_PYTHON=1`` forces the numpy fallback. Both expose
``forward(layers, X)`` and ``backward(layers, pre, G)``.

The compiled loops beat numpy only on the tiny batches of per-step attack
gradients; from a few rows up, BLAS matrix products win. Batches larger than
``COMPILED_MAX_ROWS`` therefore go to the numpy path even when the extension
is present (see ``benchmarks/bench_kernels.py``).
"""
import os

from . import _pykernels
from ._pykernels import IDENTITY, LEAKY_RELU, RELU, SOFTMAX

_compiled = None
if not os.environ.get("IGATTACK_PURE_PYTHON"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

COMPILED_MAX_ROWS = 2

if _compiled is not None:
    def forward(layers, X):
        mod = _compiled if X.shape[0] <= COMPILED_MAX_ROWS else _pykernels
        return mod.forward(layers, X)

    def backward(layers, pre, G):
        mod = _compiled if G.shape[0] <= COMPILED_MAX_ROWS else _pykernels
        return mod.backward(layers, pre, G)

    BACKEND = "compiled"
else:
    forward = _pykernels.forward
    backward = _pykernels.backward
    BACKEND = "python"

ACTIVATION_CODES = {
    "identity": IDENTITY,
    "relu": RELU,
    "leaky_relu": LEAKY_RELU,
    "softmax": SOFTMAX,
}

__all__ = ["forward", "backward", "BACKEND", "ACTIVATION_CODES", "compiled_available"]


def compiled_available():
    return _compiled is not None
