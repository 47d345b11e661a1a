"""Minimal dense feed-forward network engine.

Networks are plain numpy value objects: weights are created once by
`init_mlp` and afterwards only replaced wholesale through `apply_update`,
which returns a new network. The only mutable slot is the forward cache
(`last_activations`), refreshed on every `forward` call. All arithmetic is
float64.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class Activation(str, Enum):
    TANH = "tanh"
    RELU = "relu"
    SIGMOID = "sigmoid"
    IDENTITY = "identity"
    SOFTMAX = "softmax"


@dataclass(frozen=True)
class LayerSpec:
    """One dense layer: `out_dim` neurons, each with `in_dim` inputs plus a bias."""

    in_dim: int
    out_dim: int
    activation: Activation

    def __post_init__(self) -> None:
        if self.in_dim < 1 or self.out_dim < 1:
            raise ValueError(f"layer dims must be >= 1, got {self.in_dim}x{self.out_dim}")

    @property
    def param_count(self) -> int:
        return self.out_dim * (self.in_dim + 1)


@dataclass
class Mlp:
    """Stack of dense layers with per-layer weight matrices (out_dim x in_dim).

    `last_activations` holds the most recent forward cache: entry 0 is the
    input batch, entry t+1 the post-activation output of layer t.
    """

    specs: tuple[LayerSpec, ...]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    last_activations: list[np.ndarray] | None = field(default=None, repr=False)

    @property
    def in_dim(self) -> int:
        return self.specs[0].in_dim

    @property
    def out_dim(self) -> int:
        return self.specs[-1].out_dim

    @property
    def param_count(self) -> int:
        return sum(s.param_count for s in self.specs)

    @property
    def neuron_count(self) -> int:
        return sum(s.out_dim for s in self.specs)


@dataclass
class Batch:
    """Input rows with one-hot target rows."""

    inputs: np.ndarray
    targets: np.ndarray

    def __post_init__(self) -> None:
        if self.inputs.ndim != 2 or self.targets.ndim != 2:
            raise ValueError("batch inputs and targets must be 2-D")
        if self.inputs.shape[0] != self.targets.shape[0]:
            raise ValueError("batch inputs/targets row counts differ")
        if self.inputs.shape[0] < 1:
            raise ValueError("batch must contain at least one example")
        row_sums = self.targets.sum(axis=1)
        nonzero = np.count_nonzero(self.targets, axis=1)
        if not (np.all(row_sums == 1.0) and np.all(nonzero == 1)):
            raise ValueError("targets must be one-hot rows")

    @property
    def size(self) -> int:
        return self.inputs.shape[0]


def validate_specs(specs: list[LayerSpec] | tuple[LayerSpec, ...]) -> tuple[LayerSpec, ...]:
    """Check the layer chain: dims must connect, softmax only at the end."""
    if len(specs) == 0:
        raise ValueError("network needs at least one layer")
    for t in range(len(specs) - 1):
        if specs[t].out_dim != specs[t + 1].in_dim:
            raise ValueError(
                f"layer {t} outputs {specs[t].out_dim} but layer {t + 1} expects {specs[t + 1].in_dim}"
            )
        if specs[t].activation is Activation.SOFTMAX:
            raise ValueError("softmax is only permitted on the final layer")
    return tuple(specs)


def init_mlp(specs: list[LayerSpec] | tuple[LayerSpec, ...], seed: int) -> Mlp:
    """Build a network with uniform(-1/sqrt(in_dim), +1/sqrt(in_dim)) weights, zero biases.

    The same seed always produces a bit-identical network.
    """
    chain = validate_specs(specs)
    rng = np.random.default_rng(seed)
    weights = []
    biases = []
    for spec in chain:
        limit = 1.0 / math.sqrt(spec.in_dim)
        weights.append(rng.uniform(-limit, limit, size=(spec.out_dim, spec.in_dim)))
        biases.append(np.zeros(spec.out_dim))
    return Mlp(specs=chain, weights=weights, biases=biases)


def _activate(z: np.ndarray, activation: Activation) -> np.ndarray:
    if activation is Activation.TANH:
        return np.tanh(z)
    if activation is Activation.RELU:
        return np.maximum(z, 0.0)
    if activation is Activation.SIGMOID:
        out = np.empty_like(z)
        pos = z >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
        ez = np.exp(z[~pos])
        out[~pos] = ez / (1.0 + ez)
        return out
    if activation is Activation.IDENTITY:
        return z
    if activation is Activation.SOFTMAX:
        shifted = z - z.max(axis=1, keepdims=True)
        ez = np.exp(shifted)
        return ez / ez.sum(axis=1, keepdims=True)
    raise ValueError(f"unknown activation {activation}")


def _activation_derivative(post: np.ndarray, activation: Activation) -> np.ndarray:
    """d(activation)/d(pre-activation), expressed through the post-activation value."""
    if activation is Activation.TANH:
        return 1.0 - post**2
    if activation is Activation.RELU:
        return (post > 0).astype(post.dtype)
    if activation is Activation.SIGMOID:
        return post * (1.0 - post)
    if activation is Activation.IDENTITY:
        return np.ones_like(post)
    raise ValueError(f"no elementwise derivative for {activation}")


def forward(mlp: Mlp, inputs: np.ndarray) -> np.ndarray:
    """Evaluate the network on a batch, caching per-layer post-activations."""
    x = np.asarray(inputs, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != mlp.in_dim:
        raise ValueError(f"expected inputs of shape (batch, {mlp.in_dim}), got {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("non-finite values in network input")
    cache = [x]
    a = x
    for spec, w, b in zip(mlp.specs, mlp.weights, mlp.biases):
        z = a @ w.T + b
        a = _activate(z, spec.activation)
        cache.append(a)
    mlp.last_activations = cache
    return a


def cross_entropy(outputs: np.ndarray, targets: np.ndarray) -> float:
    """Mean categorical cross-entropy with probabilities clamped to [1e-12, 1]."""
    if outputs.shape != targets.shape:
        raise ValueError(f"outputs {outputs.shape} and targets {targets.shape} differ")
    p = np.clip(outputs, 1e-12, 1.0)
    return float(-np.mean(np.sum(targets * np.log(p), axis=1)))


def cross_entropy_rows(outputs: np.ndarray, targets: np.ndarray) -> np.ndarray:
    """Per-example cross-entropy, same clamping as `cross_entropy`."""
    if outputs.shape != targets.shape:
        raise ValueError(f"outputs {outputs.shape} and targets {targets.shape} differ")
    p = np.clip(outputs, 1e-12, 1.0)
    return -np.sum(targets * np.log(p), axis=1)


def flatten_params(mlp: Mlp) -> np.ndarray:
    """Flat parameter vector: per layer, row-major weights then biases."""
    parts = []
    for w, b in zip(mlp.weights, mlp.biases):
        parts.append(w.ravel())
        parts.append(b)
    return np.concatenate(parts)


def unflatten_params(
    specs: tuple[LayerSpec, ...], values: np.ndarray
) -> tuple[list[np.ndarray], list[np.ndarray]]:
    """Inverse of `flatten_params` for the given layer chain."""
    expected = sum(s.param_count for s in specs)
    if values.shape != (expected,):
        raise ValueError(f"expected {expected} parameters, got shape {values.shape}")
    weights = []
    biases = []
    offset = 0
    for spec in specs:
        n_w = spec.out_dim * spec.in_dim
        weights.append(values[offset : offset + n_w].reshape(spec.out_dim, spec.in_dim).copy())
        offset += n_w
        biases.append(values[offset : offset + spec.out_dim].copy())
        offset += spec.out_dim
    return weights, biases


def with_params(mlp: Mlp, values: np.ndarray) -> Mlp:
    """New network with the same architecture and the given flat parameters."""
    weights, biases = unflatten_params(mlp.specs, np.asarray(values, dtype=np.float64))
    return Mlp(specs=mlp.specs, weights=weights, biases=biases)


def apply_update(mlp: Mlp, delta: np.ndarray, scale: float) -> Mlp:
    """Return a network with parameters theta + scale * delta.

    `delta` is an ascent/credit direction; callers negate gradients for descent.
    """
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (mlp.param_count,):
        raise ValueError(f"delta has shape {delta.shape}, expected ({mlp.param_count},)")
    if not np.all(np.isfinite(delta)):
        raise ValueError("non-finite values in update delta")
    return with_params(mlp, flatten_params(mlp) + scale * delta)


def backprop_grads(mlp: Mlp, batch: Batch) -> np.ndarray:
    """Gradient of `cross_entropy(forward(mlp, batch.inputs), batch.targets)` w.r.t. theta.

    Returned in the standard flat layout. The forward pass is recomputed
    internally so the cache always matches the current parameters.
    """
    outputs = forward(mlp, batch.inputs)
    cache = mlp.last_activations
    assert cache is not None
    n = batch.size

    final = mlp.specs[-1].activation
    if final is Activation.SOFTMAX:
        # softmax + cross-entropy collapses to (p - y) / n at the pre-activation
        delta = (outputs - batch.targets) / n
    else:
        p = np.clip(outputs, 1e-12, 1.0)
        dloss = np.where((outputs >= 1e-12) & (outputs <= 1.0), -batch.targets / p, 0.0) / n
        delta = dloss * _activation_derivative(outputs, final)

    grads_w: list[np.ndarray] = [None] * len(mlp.specs)  # type: ignore[list-item]
    grads_b: list[np.ndarray] = [None] * len(mlp.specs)  # type: ignore[list-item]
    for t in range(len(mlp.specs) - 1, -1, -1):
        pre_synaptic = cache[t]
        grads_w[t] = delta.T @ pre_synaptic
        grads_b[t] = delta.sum(axis=0)
        if t > 0:
            delta = (delta @ mlp.weights[t]) * _activation_derivative(
                cache[t], mlp.specs[t - 1].activation
            )

    parts = []
    for gw, gb in zip(grads_w, grads_b):
        parts.append(gw.ravel())
        parts.append(gb)
    return np.concatenate(parts)


def accuracy(mlp: Mlp, inputs: np.ndarray, labels: np.ndarray) -> float:
    """Fraction of rows whose argmax output matches the label; ties go to the lowest class."""
    if inputs.shape[0] == 0:
        raise ValueError("cannot compute accuracy on an empty dataset")
    outputs = forward(mlp, inputs)
    predicted = np.argmax(outputs, axis=1)
    return float(np.mean(predicted == labels))
