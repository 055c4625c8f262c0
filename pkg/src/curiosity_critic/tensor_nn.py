"""Minimal dense MLP with analytic backprop for MSE loss and an Adam optimizer.

Sized for the tiny networks used here (a 60-1024-200 world model, a 60-128-1
critic, 128-wide RND pairs). Single examples only, float64 throughout.

The Adam step is fused with the outer-product gradient of each dense layer in
a numba kernel, so the weight gradient is never materialized during training.
:func:`gradients` exposes the same gradients as plain arrays for checking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numba
import numpy as np

RELU = "relu"
IDENTITY = "identity"
ACTIVATIONS = (RELU, IDENTITY)


class ConfigurationError(ValueError):
    """Invalid network or optimizer configuration."""


class ShapeError(ValueError):
    """Input or target does not match the network dimensions."""


class NumericalError(FloatingPointError):
    """A loss or gradient became non-finite."""


@dataclass
class Layer:
    weights: np.ndarray  # (out, in)
    biases: np.ndarray  # (out,)
    activation: str

    @property
    def fan_in(self) -> int:
        return self.weights.shape[1]

    @property
    def fan_out(self) -> int:
        return self.weights.shape[0]


@dataclass
class DenseNet:
    layers: list[Layer]

    @property
    def input_size(self) -> int:
        return self.layers[0].fan_in

    @property
    def output_size(self) -> int:
        return self.layers[-1].fan_out

    def parameters(self) -> list[np.ndarray]:
        """Flat list ``[W0, b0, W1, b1, ...]`` of the live parameter arrays."""
        out = []
        for layer in self.layers:
            out.extend((layer.weights, layer.biases))
        return out

    def num_parameters(self) -> int:
        return sum(p.size for p in self.parameters())

    def copy(self) -> DenseNet:
        return DenseNet(
            [Layer(ly.weights.copy(), ly.biases.copy(), ly.activation) for ly in self.layers]
        )


@dataclass
class AdamState:
    m: list[np.ndarray]
    v: list[np.ndarray]
    step_count: int = 0
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8


@dataclass
class _Trace:
    """Per-layer inputs and pre-activations from one forward pass."""

    inputs: list[np.ndarray] = field(default_factory=list)
    pre: list[np.ndarray] = field(default_factory=list)
    output: np.ndarray | None = None


def net_new(layer_sizes, activations, rng: np.random.Generator) -> DenseNet:
    """Build a net with Glorot-uniform weights and zero biases.

    ``layer_sizes`` lists every width including the input, so ``[60, 1024, 200]``
    gives two layers and needs two activations.
    """
    sizes = list(layer_sizes)
    acts = list(activations)
    if len(sizes) < 2:
        raise ConfigurationError(f"need at least one layer, got sizes {sizes}")
    if any(int(s) != s or s <= 0 for s in sizes):
        raise ConfigurationError(f"layer sizes must be positive integers, got {sizes}")
    if len(acts) != len(sizes) - 1:
        raise ConfigurationError(
            f"{len(sizes) - 1} layers but {len(acts)} activations"
        )
    for a in acts:
        if a not in ACTIVATIONS:
            raise ConfigurationError(f"unknown activation {a!r}")
    layers = []
    for fan_in, fan_out, act in zip(sizes[:-1], sizes[1:], acts):
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        w = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(w, np.zeros(fan_out), act))
    return DenseNet(layers)


def adam_new(net: DenseNet, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    params = net.parameters()
    return AdamState(
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
        lr=lr,
        beta1=beta1,
        beta2=beta2,
        eps=eps,
    )


def _check_input(net: DenseNet, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.input_size or x.ndim not in (1, 2):
        raise ShapeError(f"expected input of size {net.input_size}, got shape {x.shape}")
    return x


def _run(net: DenseNet, x: np.ndarray, trace: _Trace | None = None) -> np.ndarray:
    a = x
    for layer in net.layers:
        z = a @ layer.weights.T + layer.biases if a.ndim == 2 else layer.weights @ a + layer.biases
        if trace is not None:
            trace.inputs.append(a)
            trace.pre.append(z)
        a = np.maximum(z, 0.0) if layer.activation == RELU else z
    if trace is not None:
        trace.output = a
    return a


def net_forward(net: DenseNet, x) -> np.ndarray:
    """Output of the net for one input vector, or for each row of a matrix."""
    return _run(net, _check_input(net, x))


def mse(pred: np.ndarray, target: np.ndarray) -> float:
    diff = pred - target
    return float(diff @ diff) / diff.size


def _backprop(net: DenseNet, x, target):
    """Forward + backward for one example.

    Returns ``(loss, trace, deltas)`` where ``deltas[k]`` is dL/dz for layer k,
    so that layer k's weight gradient is ``outer(deltas[k], trace.inputs[k])``.
    """
    x = _check_input(net, x)
    target = np.asarray(target, dtype=np.float64)
    if x.ndim != 1:
        raise ShapeError("training takes a single example")
    if target.shape != (net.output_size,):
        raise ShapeError(f"expected target of size {net.output_size}, got shape {target.shape}")
    trace = _Trace()
    out = _run(net, x, trace)
    diff = out - target
    loss = float(diff @ diff) / diff.size
    if not np.isfinite(loss):
        raise NumericalError(f"non-finite loss {loss}")
    grad = (2.0 / diff.size) * diff
    deltas = [None] * len(net.layers)
    for k in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[k]
        if layer.activation == RELU:
            grad = grad * (trace.pre[k] > 0.0)
        deltas[k] = grad
        if k > 0:
            grad = layer.weights.T @ grad
    return loss, trace, deltas


def gradients(net: DenseNet, x, target) -> tuple[float, list[np.ndarray]]:
    """MSE loss and its analytic gradients, ordered like ``net.parameters()``."""
    loss, trace, deltas = _backprop(net, x, target)
    grads = []
    for k in range(len(net.layers)):
        grads.append(np.outer(deltas[k], trace.inputs[k]))
        grads.append(deltas[k].copy())
    return loss, grads


def finite_diff_grads(net: DenseNet, x, target, h: float = 1e-5) -> list[np.ndarray]:
    """Central-difference gradients of the MSE loss w.r.t. every parameter."""
    if h <= 0:
        raise ValueError("h must be positive")
    x = _check_input(net, x)
    target = np.asarray(target, dtype=np.float64)
    grads = []
    for p in net.parameters():
        g = np.zeros_like(p)
        flat, gflat = p.reshape(-1), g.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = mse(_run(net, x), target)
            flat[i] = orig - h
            down = mse(_run(net, x), target)
            flat[i] = orig
            gflat[i] = (up - down) / (2.0 * h)
        grads.append(g)
    return grads


# Moments of units that stop firing decay geometrically into the subnormal
# range, where float arithmetic is ~60x slower. Below this they are zeroed;
# the skipped update is under 1e-190.
MOMENT_FLUSH = 1e-200


@numba.njit(cache=True, fastmath=True)
def _flush(x):
    return 0.0 if abs(x) < MOMENT_FLUSH else x


@numba.njit(cache=True, fastmath=True)
def _adam_dense(w, b, mw, vw, mb, vb, delta, a_in, lr, beta1, beta2, eps, c1, c2):
    n_out, n_in = w.shape
    for i in range(n_out):
        d = delta[i]
        for j in range(n_in):
            g = d * a_in[j]
            m = _flush(beta1 * mw[i, j] + (1.0 - beta1) * g)
            v = _flush(beta2 * vw[i, j] + (1.0 - beta2) * g * g)
            mw[i, j] = m
            vw[i, j] = v
            w[i, j] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
        m = _flush(beta1 * mb[i] + (1.0 - beta1) * d)
        v = _flush(beta2 * vb[i] + (1.0 - beta2) * d * d)
        mb[i] = m
        vb[i] = v
        b[i] -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def adam_apply(net: DenseNet, adam: AdamState, grads: list[np.ndarray]) -> None:
    """One bias-corrected Adam update from explicit gradients (reference path)."""
    adam.step_count += 1
    t = adam.step_count
    c1 = 1.0 - adam.beta1**t
    c2 = 1.0 - adam.beta2**t
    for p, g, m, v in zip(net.parameters(), grads, adam.m, adam.v):
        m *= adam.beta1
        m += (1.0 - adam.beta1) * g
        v *= adam.beta2
        v += (1.0 - adam.beta2) * g * g
        p -= adam.lr * (m / c1) / (np.sqrt(v / c2) + adam.eps)


def net_train_step(net: DenseNet, adam: AdamState, x, target) -> float:
    """One MSE gradient step with Adam, in place. Returns the pre-update loss."""
    loss, trace, deltas = _backprop(net, x, target)
    for d in deltas:
        if not np.all(np.isfinite(d)):
            raise NumericalError("non-finite gradient")
    adam.step_count += 1
    t = adam.step_count
    c1 = 1.0 - adam.beta1**t
    c2 = 1.0 - adam.beta2**t
    for k, layer in enumerate(net.layers):
        _adam_dense(
            layer.weights, layer.biases,
            adam.m[2 * k], adam.v[2 * k], adam.m[2 * k + 1], adam.v[2 * k + 1],
            deltas[k], trace.inputs[k],
            adam.lr, adam.beta1, adam.beta2, adam.eps, c1, c2,
        )
    return loss
