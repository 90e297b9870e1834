"""Tests of the numpy MLP: forward-pass oracles, gradient checks against
central finite differences, SGD behavior, and the parameter save/load format.
"""
import numpy as np
import pytest

from rfcharge.nn import (MlpParams, TrainingDivergedError, forward, init_mlp,
                         leaky_relu, load_params, save_params,
                         selected_output_gradients, sgd_step)


def manual_forward(params, x):
    """Straight-line re-evaluation of the network, written independently."""
    a = np.asarray(x, dtype=float)
    n_layers = len(params.weights)
    for layer in range(n_layers):
        z = a @ params.weights[layer] + params.biases[layer]
        if layer < n_layers - 1:
            a = np.where(z >= 0, z, params.negative_slope * z)
        else:
            a = z
    return a


def test_zero_network_outputs_zero():
    params = MlpParams(weights=[np.zeros((3, 4)), np.zeros((4, 2))],
                       biases=[np.zeros(4), np.zeros(2)])
    assert np.array_equal(forward(params, np.ones(3)), np.zeros(2))


def test_single_linear_layer_is_identity():
    # one layer means no hidden activation at all: pure affine map
    params = MlpParams(weights=[np.eye(3)], biases=[np.zeros(3)])
    x = np.array([0.5, -2.0, 7.0])
    assert np.array_equal(forward(params, x), x)


def test_leaky_relu_on_hidden_layer():
    # identity weights expose the activation: negatives shrink by the slope
    params = MlpParams(weights=[np.eye(2), np.eye(2)],
                       biases=[np.zeros(2), np.zeros(2)],
                       negative_slope=0.01)
    out = forward(params, np.array([3.0, -3.0]))
    assert out == pytest.approx([3.0, -0.03])


def test_forward_matches_manual_chain():
    rng = np.random.default_rng(0)
    params = init_mlp((2, 16, 4), rng)
    x = rng.standard_normal(2)
    assert forward(params, x) == pytest.approx(manual_forward(params, x),
                                               abs=1e-12)
    batch = rng.standard_normal((7, 2))
    assert forward(params, batch) == pytest.approx(manual_forward(params, batch),
                                                   abs=1e-12)


def test_forward_is_pure():
    rng = np.random.default_rng(1)
    params = init_mlp((3, 8, 5), rng)
    x = rng.standard_normal((4, 3))
    first = forward(params, x)
    assert np.array_equal(first, forward(params, x))


def test_init_is_seeded_and_bounded():
    a = init_mlp((2, 64, 100), np.random.default_rng(5))
    b = init_mlp((2, 64, 100), np.random.default_rng(5))
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)
    assert a.layer_sizes == (2, 64, 100)
    for w in a.weights:
        assert np.max(np.abs(w)) <= 1.0 / np.sqrt(w.shape[0])


def test_copy_is_independent():
    params = init_mlp((2, 4, 3), np.random.default_rng(2))
    clone = params.copy()
    x = np.array([0.3, -1.2])
    assert np.array_equal(forward(params, x), forward(clone, x))
    clone.weights[0][0, 0] += 1.0
    assert params.weights[0][0, 0] != clone.weights[0][0, 0]


def test_gradients_match_finite_differences():
    # central differences with eps=1e-5 on a 2-8-4 net
    rng = np.random.default_rng(3)
    params = init_mlp((2, 8, 4), rng)
    inputs = rng.standard_normal((6, 2))
    actions = rng.integers(4, size=6)
    targets = rng.standard_normal(6)

    def loss_at(p):
        out = forward(p, inputs)
        diff = out[np.arange(6), actions] - targets
        return float(np.mean(diff ** 2))

    loss, grads_w, grads_b = selected_output_gradients(params, inputs,
                                                       actions, targets)
    assert loss == pytest.approx(loss_at(params))
    eps = 1e-5
    worst = 0.0
    for arrays, grads in ((params.weights, grads_w), (params.biases, grads_b)):
        for arr, grad in zip(arrays, grads):
            flat = arr.ravel()
            for k in range(flat.size):
                orig = flat[k]
                flat[k] = orig + eps
                up = loss_at(params)
                flat[k] = orig - eps
                down = loss_at(params)
                flat[k] = orig
                numeric = (up - down) / (2 * eps)
                denom = max(abs(numeric), abs(grad.ravel()[k]), 1e-8)
                worst = max(worst, abs(numeric - grad.ravel()[k]) / denom)
    assert worst < 1e-4


def test_gradient_only_flows_through_selected_outputs():
    rng = np.random.default_rng(4)
    params = init_mlp((2, 4), rng)   # single linear layer: gradient is exact
    x = np.array([[1.0, 2.0]])
    out = forward(params, x)[0]
    target = np.array([out[1] + 3.0])
    _, grads_w, _ = selected_output_gradients(params, x, np.array([1]), target)
    # non-selected output columns receive no error signal
    assert np.array_equal(grads_w[0][:, 0], np.zeros(2))
    assert np.array_equal(grads_w[0][:, 2], np.zeros(2))
    # selected column gets d/dw mean((w x - y)^2) = 2 (out - y) x
    assert grads_w[0][:, 1] == pytest.approx(2.0 * -3.0 * x[0])


def test_zero_learning_rate_is_a_no_op():
    rng = np.random.default_rng(6)
    params = init_mlp((2, 6, 3), rng)
    before = params.copy()
    sgd_step(params, rng.standard_normal((5, 2)), rng.integers(3, size=5),
             rng.standard_normal(5), learning_rate=0.0)
    for w0, w1 in zip(before.weights, params.weights):
        assert np.array_equal(w0, w1)


def test_repeated_steps_strictly_decrease_loss():
    rng = np.random.default_rng(7)
    params = init_mlp((2, 8, 4), rng)
    x = np.array([[0.4, -0.9]])
    action = np.array([2])
    target = np.array([1.5])
    losses = [sgd_step(params, x, action, target, learning_rate=0.01)
              for _ in range(100)]
    assert all(b < a for a, b in zip(losses, losses[1:]))


def test_divergence_raises_and_preserves_params():
    rng = np.random.default_rng(8)
    params = init_mlp((2, 4, 2), rng)
    before = params.copy()
    with pytest.raises(TrainingDivergedError):
        sgd_step(params, np.array([[1.0, 1.0]]), np.array([0]),
                 np.array([np.inf]), learning_rate=0.1)
    for w0, w1 in zip(before.weights, params.weights):
        assert np.array_equal(w0, w1)


def test_save_load_round_trip(tmp_path):
    rng = np.random.default_rng(9)
    params = init_mlp((2, 64, 64, 100), rng, negative_slope=0.02)
    path = tmp_path / "net.npz"
    save_params(params, path)
    loaded = load_params(path)
    assert loaded.negative_slope == params.negative_slope
    assert loaded.layer_sizes == params.layer_sizes
    x = rng.standard_normal((3, 2))
    assert np.array_equal(forward(loaded, x), forward(params, x))


def test_load_rejects_unknown_format_version(tmp_path):
    path = tmp_path / "bad.npz"
    np.savez(path, format_version=np.array(99), negative_slope=np.array(0.01),
             W0=np.zeros((2, 2)), b0=np.zeros(2))
    with pytest.raises(ValueError):
        load_params(path)


def test_params_validation_catches_shape_mismatch():
    with pytest.raises(ValueError):
        MlpParams(weights=[np.zeros((2, 3)), np.zeros((4, 1))],
                  biases=[np.zeros(3), np.zeros(1)]).validate()
    with pytest.raises(ValueError):
        MlpParams(weights=[np.zeros((2, 3))], biases=[np.zeros(2)]).validate()


def test_leaky_relu_values():
    z = np.array([-2.0, 0.0, 3.0])
    assert leaky_relu(z, 0.1) == pytest.approx([-0.2, 0.0, 3.0])
