"""Time the compiled MLP kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]

Covers the shapes the attacks hit: one sample (gradient steps), a 64-point
integrated-gradient path, and a 4096-row chunk.
"""
import argparse
import timeit

import numpy as np

from igattack import _pykernels
from igattack import kernels
from igattack.kernels import COMPILED_MAX_ROWS, compiled_available
from igattack.nncore import random_mlp

try:
    from igattack import _kernels
except ImportError:
    _kernels = None

DIMS = [20, 64, 64, 32, 5]
BATCHES = [1, 2, 8, 64, 4096]


def _round_trip(mod, layers, X, G):
    out, pre = mod.forward(layers, X)
    return mod.backward(layers, pre, G)


def _best_us(fn, repeat: int) -> float:
    number = max(1, int(0.2 / max(min(timeit.repeat(fn, number=1, repeat=3)), 1e-7)))
    return 1e6 * min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels is None:
        print("compiled kernels are not built; run: python3 setup.py build_ext --inplace")
        return
    rng = np.random.default_rng(0)
    layers = random_mlp(rng, DIMS)._packed
    print(f"network {DIMS}, compiled selected by default: {compiled_available()}")
    print(f"dispatch: compiled for batches of <= {COMPILED_MAX_ROWS} rows, numpy above")
    print(f"{'batch':>6}  {'python us':>10}  {'compiled us':>12}  {'speedup':>8}  {'dispatched us':>14}  {'max |diff|':>10}")
    for batch in BATCHES:
        X = rng.random((batch, DIMS[0]))
        G = rng.normal(size=(batch, DIMS[-1]))
        py = _best_us(lambda: _round_trip(_pykernels, layers, X, G), args.repeat)
        cy = _best_us(lambda: _round_trip(_kernels, layers, X, G), args.repeat)
        auto = _best_us(lambda: _round_trip(kernels, layers, X, G), args.repeat)
        diff = np.abs(np.asarray(_round_trip(_kernels, layers, X, G)) - _round_trip(_pykernels, layers, X, G)).max()
        print(f"{batch:>6}  {py:>10.1f}  {cy:>12.1f}  {py / cy:>7.2f}x  {auto:>14.1f}  {diff:>10.1e}")


if __name__ == "__main__":
    main()
