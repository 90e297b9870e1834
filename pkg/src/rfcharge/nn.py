"""Dense multilayer perceptron with leaky-ReLU hidden units, written directly
on numpy: explicit forward pass, backpropagation, and plain SGD on the mean
squared error of the selected output units only. No autograd, no framework.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PARAMS_FORMAT_VERSION = 1


class TrainingDivergedError(RuntimeError):
    """A gradient or loss stopped being finite during training."""


@dataclass
class MlpParams:
    """Weights and biases of a fully-connected net.

    weights[l] has shape (fan_in, fan_out); biases[l] has shape (fan_out,).
    Hidden layers apply leaky ReLU with the given negative slope; the output
    layer is linear.
    """

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    negative_slope: float = 0.01

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return tuple([self.weights[0].shape[0]] +
                     [w.shape[1] for w in self.weights])

    def validate(self) -> None:
        if len(self.weights) != len(self.biases) or not self.weights:
            raise ValueError("weights and biases must be equal-length, non-empty")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.ndim != 2 or b.shape != (w.shape[1],):
                raise ValueError(f"layer {i}: bias shape {b.shape} does not "
                                 f"match weight shape {w.shape}")
            if i > 0 and w.shape[0] != self.weights[i - 1].shape[1]:
                raise ValueError(f"layer {i}: fan-in {w.shape[0]} does not "
                                 f"match previous fan-out")
            if not (np.all(np.isfinite(w)) and np.all(np.isfinite(b))):
                raise ValueError(f"layer {i}: non-finite parameters")

    def copy(self) -> "MlpParams":
        return MlpParams([w.copy() for w in self.weights],
                         [b.copy() for b in self.biases],
                         self.negative_slope)


def init_mlp(layer_sizes: tuple[int, ...], rng: np.random.Generator,
             negative_slope: float = 0.01) -> MlpParams:
    """Seeded uniform init scaled by 1/sqrt(fan_in) per layer."""
    if len(layer_sizes) < 2:
        raise ValueError("need at least an input and an output size")
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return MlpParams(weights, biases, negative_slope)


def leaky_relu(z: np.ndarray, negative_slope: float) -> np.ndarray:
    return np.where(z >= 0, z, negative_slope * z)


def _leaky_relu_grad(z: np.ndarray, negative_slope: float) -> np.ndarray:
    return np.where(z >= 0, 1.0, negative_slope)


def forward(params: MlpParams, x: np.ndarray) -> np.ndarray:
    """Network output for a single input vector or a (batch, d_in) matrix."""
    a = np.asarray(x, dtype=float)
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = a @ w + b
        a = z if l == last else leaky_relu(z, params.negative_slope)
    return a


def _forward_cached(params, x):
    activations = [np.asarray(x, dtype=float)]
    pre_activations = []
    last = len(params.weights) - 1
    for l, (w, b) in enumerate(zip(params.weights, params.biases)):
        z = activations[-1] @ w + b
        pre_activations.append(z)
        activations.append(z if l == last else
                           leaky_relu(z, params.negative_slope))
    return activations, pre_activations


def selected_output_gradients(params: MlpParams, inputs: np.ndarray,
                              action_indices: np.ndarray,
                              targets: np.ndarray
                              ) -> tuple[float, list[np.ndarray], list[np.ndarray]]:
    """Loss and parameter gradients of mean((out[i, a_i] - y_i)^2).

    Only the selected output unit of each row receives error signal; all
    other outputs contribute nothing, as in a Q-update on taken actions.
    """
    inputs = np.atleast_2d(np.asarray(inputs, dtype=float))
    action_indices = np.asarray(action_indices, dtype=int)
    targets = np.asarray(targets, dtype=float)
    m = inputs.shape[0]
    activations, pre_activations = _forward_cached(params, inputs)
    out = activations[-1]
    rows = np.arange(m)
    diff = out[rows, action_indices] - targets
    loss = float(np.mean(diff ** 2))

    delta = np.zeros_like(out)
    delta[rows, action_indices] = 2.0 * diff / m
    grads_w = [None] * len(params.weights)
    grads_b = [None] * len(params.biases)
    for l in range(len(params.weights) - 1, -1, -1):
        grads_w[l] = activations[l].T @ delta
        grads_b[l] = delta.sum(axis=0)
        if l > 0:
            delta = (delta @ params.weights[l].T) * _leaky_relu_grad(
                pre_activations[l - 1], params.negative_slope)
    return loss, grads_w, grads_b


def sgd_step(params: MlpParams, inputs: np.ndarray, action_indices: np.ndarray,
             targets: np.ndarray, learning_rate: float) -> float:
    """One in-place SGD step on the selected-output MSE; returns the loss
    measured before the update. Raises TrainingDivergedError on non-finite
    loss or gradients, leaving the parameters untouched.
    """
    loss, grads_w, grads_b = selected_output_gradients(
        params, inputs, action_indices, targets)
    finite = np.isfinite(loss) and all(
        np.all(np.isfinite(g)) for g in grads_w + grads_b)
    if not finite:
        raise TrainingDivergedError("non-finite loss or gradient in SGD step")
    for w, b, gw, gb in zip(params.weights, params.biases, grads_w, grads_b):
        w -= learning_rate * gw
        b -= learning_rate * gb
    return loss


def save_params(params: MlpParams, path) -> None:
    """Write parameters as a flat npz tensor list: version, slope, W0, b0, ..."""
    arrays = {"format_version": np.array(PARAMS_FORMAT_VERSION),
              "negative_slope": np.array(params.negative_slope)}
    for i, (w, b) in enumerate(zip(params.weights, params.biases)):
        arrays[f"W{i}"] = w
        arrays[f"b{i}"] = b
    np.savez(path, **arrays)


def load_params(path) -> MlpParams:
    with np.load(path) as data:
        version = int(data["format_version"])
        if version != PARAMS_FORMAT_VERSION:
            raise ValueError(f"unsupported parameter format version {version}")
        weights, biases = [], []
        i = 0
        while f"W{i}" in data:
            weights.append(data[f"W{i}"])
            biases.append(data[f"b{i}"])
            i += 1
        params = MlpParams(weights, biases, float(data["negative_slope"]))
    params.validate()
    return params
