import numpy as np
import pytest

from igattack import _pykernels, kernels
from igattack.nncore import Layer, Model, random_mlp

compiled = pytest.importorskip("igattack._kernels") if kernels.compiled_available() else None


def test_backend_reported():
    assert kernels.BACKEND in ("compiled", "python")


@pytest.mark.skipif(compiled is None, reason="compiled kernels not built")
@pytest.mark.parametrize("act", ["relu", "leaky_relu", "softmax", "identity"])
def test_compiled_matches_fallback(act):
    rng = np.random.default_rng(4)
    layers = (
        Layer(rng.normal(size=(11, 7)), rng.normal(size=11), act, 0.2),
        Layer(rng.normal(size=(9, 11)), rng.normal(size=9), "leaky_relu", 0.05),
        Layer(rng.normal(size=(4, 9)), rng.normal(size=4)),
    )
    packed = Model(layers)._packed
    X = rng.random((13, 7))
    Zc, pre_c = compiled.forward(packed, X)
    Zp, pre_p = _pykernels.forward(packed, X)
    np.testing.assert_allclose(Zc, Zp, rtol=0, atol=1e-12)
    G = rng.normal(size=(13, 4))
    np.testing.assert_allclose(compiled.backward(packed, pre_c, G), _pykernels.backward(packed, pre_p, G),
                               rtol=0, atol=1e-12)


@pytest.mark.skipif(compiled is None, reason="compiled kernels not built")
def test_compiled_leaky_zero_convention():
    packed = Model((Layer([[1.0]], [0.0], "leaky_relu", 0.1), Layer([[1.0]], [0.0])))._packed
    X = np.zeros((1, 1))
    _, pre = compiled.forward(packed, X)
    assert compiled.backward(packed, pre, np.ones((1, 1))).tolist() == [[1.0]]


def test_backward_does_not_mutate_cotangent():
    rng = np.random.default_rng(0)
    model = random_mlp(rng, [3, 5, 2], activation="relu")
    X = rng.random((4, 3))
    G = rng.normal(size=(4, 2))
    before = G.copy()
    _, pre = kernels.forward(model._packed, X)
    kernels.backward(model._packed, pre, G)
    np.testing.assert_array_equal(G, before)
