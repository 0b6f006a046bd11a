import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from igattack.nncore import (
    Layer,
    Model,
    ShapeError,
    Standardization,
    forward_logits,
    input_gradient,
    logit_jacobian,
    loss_and_input_gradient,
    predict,
    probabilities,
    random_mlp,
)

from conftest import affine
from oracles import away_from_kinks, central_difference, forward_loops, relative_error


def test_zero_weights_give_biases():
    model = Model((Layer(np.zeros((2, 3)), [1.0, 2.0]),))
    assert forward_logits(model, [0.1, 0.2, 0.3]).tolist() == [1.0, 2.0]


def test_identity_affine():
    model = affine(np.eye(2))
    assert forward_logits(model, [0.3, 0.7]).tolist() == [0.3, 0.7]


def test_forward_matches_loop_oracle(rng):
    model = random_mlp(rng, [9, 12, 10, 5])
    for _ in range(10):
        x = rng.random(9)
        np.testing.assert_allclose(forward_logits(model, x), forward_loops(model, x), rtol=0, atol=1e-12)


def test_forward_with_preprocessing_matches_oracle(rng):
    base = random_mlp(rng, [4, 6, 3])
    model = Model(base.layers, Standardization(rng.random(4), 0.5 + rng.random(4)))
    x = rng.random(4)
    np.testing.assert_allclose(forward_logits(model, x), forward_loops(model, x), atol=1e-12)


def test_shape_mismatch_rejected(mlp3):
    with pytest.raises(ShapeError):
        forward_logits(mlp3, np.zeros(5))
    with pytest.raises(ShapeError):
        Model((Layer(np.zeros((3, 2)), np.zeros(3), "relu"), Layer(np.zeros((2, 4)), np.zeros(2))))


def test_model_invariants_enforced():
    with pytest.raises(ValueError):
        Model((Layer(np.eye(2), np.zeros(2), "relu"),))
    with pytest.raises(ValueError):
        Layer(np.eye(2), np.zeros(2), "leaky_relu", slope=0.0)
    with pytest.raises(ValueError):
        Standardization([0.0, 0.0], [1.0, 0.0])


@pytest.mark.parametrize("logits,expected", [([1, 2, 0], 1), ([5, 5], 0)])
def test_predict_argmax_and_tie_break(logits, expected):
    model = Model((Layer(np.zeros((len(logits), 2)), logits),))
    assert predict(model, [0.5, 0.5]) == expected


def test_predict_matches_oracle_argmax(rng):
    model = random_mlp(rng, [5, 16, 8, 4])
    X = rng.random((100, 5))
    assert [predict(model, x) for x in X] == [int(np.argmax(forward_loops(model, x))) for x in X]


def test_affine_gradient_is_weight_row():
    W = np.array([[1.0, -2.0, 3.0], [0.5, 0.25, -4.0]])
    model = affine(W, np.array([0.1, -0.3]))
    for c in range(2):
        assert input_gradient(model, [0.2, 0.4, 0.9], c).tolist() == W[c].tolist()


def test_zero_weights_zero_gradient():
    model = Model((Layer(np.zeros((3, 4)), [1.0, 0.0, 2.0]),))
    assert not np.any(input_gradient(model, np.full(4, 0.5), 2))


def test_input_gradient_finite_differences(rng):
    checked = 0
    while checked < 25:
        model = random_mlp(rng, [7, 10, 9, 4])
        x = rng.random(7)
        if not away_from_kinks(model, x):
            continue
        c = int(rng.integers(4))
        fd = central_difference(lambda v: forward_logits(model, v)[c], x)
        assert relative_error(input_gradient(model, x, c), fd).max() <= 1e-4
        checked += 1


def test_gradient_through_standardization(rng):
    base = random_mlp(rng, [5, 8, 3])
    model = Model(base.layers, Standardization(rng.random(5), 0.2 + rng.random(5)))
    x = rng.random(5)
    while not away_from_kinks(model, x):
        x = rng.random(5)
    fd = central_difference(lambda v: forward_logits(model, v)[1], x)
    assert relative_error(input_gradient(model, x, 1), fd).max() <= 1e-4


def test_leaky_relu_derivative_at_zero_is_one():
    # hidden pre-activation is exactly 0 at x = 0
    model = Model((Layer([[1.0]], [0.0], "leaky_relu", 0.1), Layer([[1.0]], [0.0])))
    assert input_gradient(model, [0.0], 0).tolist() == [1.0]
    relu = Model((Layer([[1.0]], [0.0], "relu"), Layer([[1.0]], [0.0])))
    assert input_gradient(relu, [0.0], 0).tolist() == [0.0]


def test_softmax_hidden_layer_gradient(rng):
    model = Model((
        Layer(rng.normal(size=(5, 4)), rng.normal(size=5), "softmax"),
        Layer(rng.normal(size=(3, 5)), rng.normal(size=3)),
    ))
    x = rng.random(4)
    fd = central_difference(lambda v: forward_logits(model, v)[2], x)
    assert relative_error(input_gradient(model, x, 2), fd).max() <= 1e-4


def test_jacobian_rows_are_class_gradients(mlp3, rng):
    x = rng.random(6)
    Z, J = logit_jacobian(mlp3, x)
    np.testing.assert_array_equal(Z, forward_logits(mlp3, x))
    for c in range(mlp3.num_classes):
        np.testing.assert_allclose(J[c], input_gradient(mlp3, x, c), atol=1e-14)


@pytest.mark.parametrize("m", [2, 5, 10])
def test_uniform_logits_loss_is_log_m(m):
    model = Model((Layer(np.zeros((m, 3)), np.full(m, 0.7)),))
    loss, grad = loss_and_input_gradient(model, [0.1, 0.2, 0.3], 0)
    assert loss == pytest.approx(np.log(m), abs=1e-15)
    assert not np.any(grad)


def test_loss_decreases_as_true_logit_grows():
    losses = []
    for big in [0.0, 1.0, 2.0, 5.0, 10.0, 30.0]:
        model = Model((Layer(np.zeros((3, 2)), [big, 0.0, 0.0]),))
        losses.append(loss_and_input_gradient(model, [0.5, 0.5], 0)[0])
    assert all(a > b for a, b in zip(losses, losses[1:]))
    assert losses[-1] < 1e-12


def test_loss_gradient_finite_differences(rng):
    checked = 0
    while checked < 15:
        model = random_mlp(rng, [6, 9, 5])
        x = rng.random(6)
        if not away_from_kinks(model, x):
            continue
        y = int(rng.integers(5))
        fd = central_difference(lambda v: loss_and_input_gradient(model, v, y)[0], x)
        assert relative_error(loss_and_input_gradient(model, x, y)[1], fd).max() <= 1e-4
        checked += 1


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), shift=st.floats(-50, 50))
def test_softmax_normalized_and_argmax_shift_invariant(seed, shift):
    r = np.random.default_rng(seed)
    model = random_mlp(r, [4, 6, 5])
    x = r.random(4)
    p = probabilities(model, x)
    assert abs(p.sum() - 1.0) <= 1e-9 and np.all((p >= 0) & (p <= 1))
    shifted = Model(model.layers[:-1] + (Layer(model.layers[-1].weights, model.layers[-1].biases + shift),))
    assert predict(shifted, x) == predict(model, x)


def test_forward_deterministic(mlp3, rng):
    x = rng.random(6)
    assert forward_logits(mlp3, x).tobytes() == forward_logits(mlp3, x).tobytes()


def test_model_is_immutable(mlp3):
    with pytest.raises(ValueError):
        mlp3.layers[0].weights[0, 0] = 1.0


def test_batch_forward_matches_single(mlp3, rng):
    X = rng.random((5, 6))
    Z = forward_logits(mlp3, X)
    for i in range(5):
        np.testing.assert_allclose(Z[i], forward_logits(mlp3, X[i]), atol=1e-15)
