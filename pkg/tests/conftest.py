import numpy as np
import pytest

from igattack.dataio import synth_blobs, train_mlp, train_test_split
from igattack.nncore import Layer, Model, random_mlp

BLOBS = dict(seed=7, n_samples=2000, n_features=20, n_classes=5, spread=0.05)
HIDDEN = [64, 64, 32]


def affine(W, b=None):
    W = np.asarray(W, dtype=np.float64)
    b = np.zeros(W.shape[0]) if b is None else b
    return Model((Layer(W, b, "identity"),))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture
def mlp3(rng):
    return random_mlp(rng, [6, 8, 7, 4])


@pytest.fixture(scope="session")
def blobs():
    data = synth_blobs(**BLOBS)
    return train_test_split(data, 0.2, seed=1)


@pytest.fixture(scope="session")
def blobs_model(blobs):
    train, test = blobs
    result = train_mlp(train, HIDDEN + [BLOBS["n_classes"]], epochs=20, lr=1e-3, batch=32, seed=3, test=test)
    assert result.test_accuracy >= 0.95
    return result.model
