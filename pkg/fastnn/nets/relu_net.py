"""
Dense ReLU networks with output truncation.

A network with L hidden layers and widths (d_0, d_1, ..., d_L, d_{L+1}) computes
T_M(W_{L+1} s(... s(W_1 x + b_1) ...) + b_{L+1}) where s is the ReLU and T_M clips
every output entry to [-M, M]. All arrays are float64.

Forward and backward passes work on batches (n, d_0); a single vector is promoted
to a batch of one and demoted on return.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from fastnn.errors import ConfigError, ShapeError

SeedLike = Union[int, np.random.Generator, np.random.SeedSequence]


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def truncate(z, M: float):
    """sign(z) * min(|z|, M), entrywise for arrays."""
    if M <= 0:
        raise ConfigError(f"truncation level must be positive, got {M}")
    if math.isinf(M):
        return z
    return np.clip(z, -M, M)


@dataclass
class DenseReLUNet:
    weights: List[np.ndarray]
    biases: List[np.ndarray]
    truncation: float = math.inf
    weight_bound: float = math.inf

    def __post_init__(self) -> None:
        if not self.weights or len(self.weights) != len(self.biases):
            raise ShapeError("a network needs one bias per weight matrix and at least one layer")
        for i, (W, b) in enumerate(zip(self.weights, self.biases)):
            if W.ndim != 2 or b.ndim != 1 or W.shape[0] != b.shape[0]:
                raise ShapeError(f"layer {i + 1}: weight {W.shape} does not match bias {b.shape}")
            if i > 0 and W.shape[1] != self.weights[i - 1].shape[0]:
                raise ShapeError(
                    f"layer {i + 1}: expects {W.shape[1]} inputs, previous layer has {self.weights[i - 1].shape[0]}"
                )

    @property
    def depth(self) -> int:
        return len(self.weights) - 1

    @property
    def widths(self) -> List[int]:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[1]

    @property
    def output_dim(self) -> int:
        return self.weights[-1].shape[0]

    @property
    def max_hidden_width(self) -> int:
        hidden = self.widths[1:-1]
        return max(hidden) if hidden else 0

    def max_abs_parameter(self) -> float:
        return max(max(float(np.max(np.abs(W), initial=0.0)), float(np.max(np.abs(b), initial=0.0)))
                   for W, b in zip(self.weights, self.biases))

    def parameters(self) -> List[np.ndarray]:
        params: List[np.ndarray] = []
        for W, b in zip(self.weights, self.biases):
            params.extend([W, b])
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "DenseReLUNet":
        return DenseReLUNet(
            weights=[np.asarray(p, dtype=float) for p in params[0::2]],
            biases=[np.asarray(p, dtype=float) for p in params[1::2]],
            truncation=self.truncation,
            weight_bound=self.weight_bound,
        )

    def copy(self) -> "DenseReLUNet":
        return self.with_parameters([p.copy() for p in self.parameters()])


@dataclass
class ForwardCache:
    activations: List[np.ndarray] = field(default_factory=list)
    pre_activations: List[np.ndarray] = field(default_factory=list)
    output_pre: Optional[np.ndarray] = None


def _as_batch(net_input_dim: int, x) -> Tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=float)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != net_input_dim:
        raise ShapeError(f"network expects inputs of length {net_input_dim}, got shape {np.shape(x)}")
    return X, single


def forward_with_cache(net: DenseReLUNet, X: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    cache = ForwardCache(activations=[X])
    h = X
    for W, b in zip(net.weights[:-1], net.biases[:-1]):
        z = h @ W.T + b
        cache.pre_activations.append(z)
        h = np.maximum(z, 0.0)
        cache.activations.append(h)
    out = h @ net.weights[-1].T + net.biases[-1]
    cache.output_pre = out
    return truncate(out, net.truncation), cache


def forward(net: DenseReLUNet, x) -> np.ndarray:
    X, single = _as_batch(net.input_dim, x)
    out, _ = forward_with_cache(net, X)
    return out[0] if single else out


def backprop(net: DenseReLUNet, cache: ForwardCache, grad_out: np.ndarray) -> Tuple[List[np.ndarray], np.ndarray]:
    """Pull grad_out (n, d_out) back through the net.

    Returns parameter gradients in `net.parameters()` order and the gradient
    with respect to the input batch. T_M passes gradient only strictly inside
    (-M, M); ReLU'(0) = 0.
    """
    g = grad_out
    if not math.isinf(net.truncation):
        g = g * (np.abs(cache.output_pre) < net.truncation)
    grads: List[np.ndarray] = [np.empty(0)] * (2 * len(net.weights))
    last = len(net.weights) - 1
    grads[2 * last] = g.T @ cache.activations[last]
    grads[2 * last + 1] = g.sum(axis=0)
    gh = g @ net.weights[last]
    for layer in range(last - 1, -1, -1):
        gz = gh * (cache.pre_activations[layer] > 0.0)
        grads[2 * layer] = gz.T @ cache.activations[layer]
        grads[2 * layer + 1] = gz.sum(axis=0)
        gh = gz @ net.weights[layer]
    return grads, gh


def backward(net: DenseReLUNet, x, y) -> Tuple[float, List[np.ndarray]]:
    """Mean squared error over the batch and its gradient."""
    X, _ = _as_batch(net.input_dim, x)
    Y = np.asarray(y, dtype=float).reshape(X.shape[0], -1)
    if Y.shape[1] != net.output_dim:
        raise ShapeError(f"targets have {Y.shape[1]} columns, network outputs {net.output_dim}")
    if X.shape[0] == 0:
        raise ShapeError("empty batch")
    pred, cache = forward_with_cache(net, X)
    resid = pred - Y
    loss = float(np.mean(resid ** 2))
    grads, _ = backprop(net, cache, 2.0 * resid / resid.size)
    return loss, grads


def init_net(
    widths: Sequence[int],
    seed: SeedLike,
    scheme: str = "uniform",
    truncation: float = math.inf,
    weight_bound: float = math.inf,
) -> DenseReLUNet:
    widths = [int(w) for w in widths]
    if len(widths) < 2 or any(w < 1 for w in widths):
        raise ConfigError(f"invalid widths {widths}: need input and output sizes, all positive")
    if scheme != "uniform":
        raise ConfigError(f"unknown initialisation scheme {scheme!r}")
    rng = as_generator(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_out, fan_in)))
        biases.append(np.zeros(fan_out))
    return DenseReLUNet(weights, biases, truncation=truncation, weight_bound=weight_bound)


def clamp_parameters(params: Sequence[np.ndarray], bound: float) -> List[np.ndarray]:
    if math.isinf(bound):
        return list(params)
    return [np.clip(p, -bound, bound) for p in params]


# ---------------------------------------------------------------------------
# Stacked subnets: k independent nets of identical shape evaluated together
# ---------------------------------------------------------------------------


@dataclass
class StackedReLUNets:
    """k nets sharing one shape. weights[l] has shape (k, d_l, d_{l-1})."""

    weights: List[np.ndarray]
    biases: List[np.ndarray]
    truncation: float = math.inf

    @property
    def count(self) -> int:
        return self.weights[0].shape[0]

    @property
    def input_dim(self) -> int:
        return self.weights[0].shape[2]

    def parameters(self) -> List[np.ndarray]:
        params: List[np.ndarray] = []
        for W, b in zip(self.weights, self.biases):
            params.extend([W, b])
        return params

    def with_parameters(self, params: Sequence[np.ndarray]) -> "StackedReLUNets":
        return StackedReLUNets(list(params[0::2]), list(params[1::2]), truncation=self.truncation)

    def member(self, j: int) -> DenseReLUNet:
        return DenseReLUNet(
            [W[j].copy() for W in self.weights],
            [b[j].copy() for b in self.biases],
            truncation=self.truncation,
        )


def init_stacked(count: int, widths: Sequence[int], seed: SeedLike, truncation: float = math.inf) -> StackedReLUNets:
    widths = [int(w) for w in widths]
    if count < 1 or len(widths) < 2 or any(w < 1 for w in widths):
        raise ConfigError(f"invalid stacked net spec: count={count}, widths={widths}")
    rng = as_generator(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        limit = math.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(count, fan_out, fan_in)))
        biases.append(np.zeros((count, fan_out)))
    return StackedReLUNets(weights, biases, truncation=truncation)


def stacked_forward_with_cache(nets: StackedReLUNets, X: np.ndarray) -> Tuple[np.ndarray, ForwardCache]:
    """X has shape (n, k, d_0); returns (n, k, d_out)."""
    if X.ndim != 3 or X.shape[1] != nets.count or X.shape[2] != nets.input_dim:
        raise ShapeError(f"stacked nets expect (n, {nets.count}, {nets.input_dim}), got {X.shape}")
    cache = ForwardCache(activations=[X])
    h = X
    for W, b in zip(nets.weights[:-1], nets.biases[:-1]):
        z = np.einsum("nki,koi->nko", h, W) + b[None, :, :]
        cache.pre_activations.append(z)
        h = np.maximum(z, 0.0)
        cache.activations.append(h)
    out = np.einsum("nki,koi->nko", h, nets.weights[-1]) + nets.biases[-1][None, :, :]
    cache.output_pre = out
    return truncate(out, nets.truncation), cache


def stacked_backprop(
    nets: StackedReLUNets, cache: ForwardCache, grad_out: np.ndarray
) -> Tuple[List[np.ndarray], np.ndarray]:
    g = grad_out
    if not math.isinf(nets.truncation):
        g = g * (np.abs(cache.output_pre) < nets.truncation)
    grads: List[np.ndarray] = [np.empty(0)] * (2 * len(nets.weights))
    last = len(nets.weights) - 1
    grads[2 * last] = np.einsum("nko,nki->koi", g, cache.activations[last])
    grads[2 * last + 1] = g.sum(axis=0)
    gh = np.einsum("nko,koi->nki", g, nets.weights[last])
    for layer in range(last - 1, -1, -1):
        gz = gh * (cache.pre_activations[layer] > 0.0)
        grads[2 * layer] = np.einsum("nko,nki->koi", gz, cache.activations[layer])
        grads[2 * layer + 1] = gz.sum(axis=0)
        gh = np.einsum("nko,koi->nki", gz, nets.weights[layer])
    return grads, gh
