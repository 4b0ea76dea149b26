"""
Structural algebra on ReLU networks: padding, composition and parallelization.

Every constructor returns a BuiltNet whose declared depth, width and weight bound
are checked against the realized parameters when the BuiltNet is created.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Union

import numpy as np
from scipy.linalg import block_diag

from fastnn.errors import ConfigError, ContractViolation, ShapeError
from fastnn.nets.relu_net import DenseReLUNet, forward

logger = logging.getLogger(__name__)

# relative slack for float round-off when comparing measured weights to bounds
_BOUND_SLACK = 1e-9


@dataclass(frozen=True)
class BuiltNet:
    net: DenseReLUNet
    declared_depth: int
    declared_width: int
    declared_weight: float
    name: str

    def __post_init__(self) -> None:
        problems = self.violations()
        if problems:
            raise ContractViolation(f"{self.name}: " + "; ".join(problems))

    @property
    def depth(self) -> int:
        return self.net.depth

    @property
    def width(self) -> int:
        return self.net.max_hidden_width

    @property
    def max_weight(self) -> float:
        return self.net.max_abs_parameter()

    def violations(self) -> List[str]:
        problems = []
        if self.depth > self.declared_depth:
            problems.append(f"depth {self.depth} exceeds declared {self.declared_depth}")
        if self.width > self.declared_width:
            problems.append(f"width {self.width} exceeds declared {self.declared_width}")
        if self.max_weight > self.declared_weight * (1.0 + _BOUND_SLACK) + _BOUND_SLACK:
            problems.append(f"max |weight| {self.max_weight:.6g} exceeds declared {self.declared_weight:.6g}")
        return problems

    def __call__(self, x) -> np.ndarray:
        return forward(self.net, x)


NetLike = Union[BuiltNet, DenseReLUNet]


def unwrap(net: NetLike) -> DenseReLUNet:
    return net.net if isinstance(net, BuiltNet) else net


def _declared_weight(net: NetLike) -> float:
    return net.declared_weight if isinstance(net, BuiltNet) else net.max_abs_parameter()


def _declared_width(net: NetLike) -> int:
    return net.declared_width if isinstance(net, BuiltNet) else net.max_hidden_width


def from_layers(weights: Sequence[np.ndarray], biases: Sequence[np.ndarray]) -> DenseReLUNet:
    return DenseReLUNet([np.asarray(W, dtype=float) for W in weights], [np.asarray(b, dtype=float) for b in biases])


# ---------------------------------------------------------------------------
# Padding
# ---------------------------------------------------------------------------


def _widen(net: DenseReLUNet, target_width: int) -> DenseReLUNet:
    weights = [W.copy() for W in net.weights]
    biases = [b.copy() for b in net.biases]
    for layer in range(net.depth):
        extra = target_width - weights[layer].shape[0]
        if extra <= 0:
            continue
        weights[layer] = np.vstack([weights[layer], np.zeros((extra, weights[layer].shape[1]))])
        biases[layer] = np.concatenate([biases[layer], np.zeros(extra)])
        nxt = weights[layer + 1]
        weights[layer + 1] = np.hstack([nxt, np.zeros((nxt.shape[0], extra))])
    return DenseReLUNet(weights, biases, truncation=net.truncation)


def pad(net: NetLike, target_depth: int, target_width: int) -> BuiltNet:
    """Grow a net to exactly (target_depth, target_width) without changing its function."""
    base = unwrap(net)
    depth, width = base.depth, base.max_hidden_width
    if target_depth < depth or target_width < width:
        raise ConfigError(
            f"cannot pad a depth-{depth}, width-{width} net down to depth {target_depth}, width {target_width}"
        )
    weight = _declared_weight(net)
    if target_depth == depth:
        padded = _widen(base, target_width) if depth > 0 else base
        return BuiltNet(padded, target_depth, target_width, weight, "pad")

    if depth == 0:
        # affine map A x + c becomes s(Ax + c) - s(-Ax - c) through one hidden layer
        A, c = base.weights[0], base.biases[0]
        k = A.shape[0]
        if target_width < 2 * k:
            raise ConfigError(f"padding an affine map with {k} outputs needs width >= {2 * k}")
        base = DenseReLUNet(
            [np.vstack([A, -A]), np.hstack([np.eye(k), -np.eye(k)])],
            [np.concatenate([c, -c]), np.zeros(k)],
            truncation=base.truncation,
        )
        weight = max(weight, 1.0)
        depth = 1

    widened = _widen(base, target_width)
    # hidden activations are nonnegative, so s(I h) = h inserts an exact identity block
    inserts = target_depth - depth
    weights = [widened.weights[0]] + [np.eye(target_width) for _ in range(inserts)] + widened.weights[1:]
    biases = [widened.biases[0]] + [np.zeros(target_width) for _ in range(inserts)] + widened.biases[1:]
    padded = DenseReLUNet(weights, biases, truncation=widened.truncation)
    return BuiltNet(padded, target_depth, target_width, max(weight, 1.0), "pad")


# ---------------------------------------------------------------------------
# Composition
# ---------------------------------------------------------------------------


def compose(f: NetLike, g: NetLike, name: str = "compose") -> BuiltNet:
    """g after f, merging f's output affine map into g's input affine map."""
    fn, gn = unwrap(f), unwrap(g)
    if fn.output_dim != gn.input_dim:
        raise ShapeError(f"cannot compose: f outputs {fn.output_dim} values, g expects {gn.input_dim}")
    if not (math.isinf(fn.truncation) and math.isinf(gn.truncation)):
        raise ConfigError("composition requires untruncated networks")
    W_out, b_out = fn.weights[-1], fn.biases[-1]
    V_in, c_in = gn.weights[0], gn.biases[0]
    merged_W = V_in @ W_out
    merged_b = V_in @ b_out + c_in
    weights = fn.weights[:-1] + [merged_W] + gn.weights[1:]
    biases = fn.biases[:-1] + [merged_b] + gn.biases[1:]
    net = DenseReLUNet([W.copy() for W in weights], [b.copy() for b in biases])

    inner = fn.output_dim
    g_in = max(float(np.max(np.abs(V_in))), float(np.max(np.abs(c_in), initial=0.0)))
    f_out = max(float(np.max(np.abs(W_out))), float(np.max(np.abs(b_out), initial=0.0)), 1.0)
    merged_bound = (inner + 1) * g_in * f_out
    declared_weight = max(_declared_weight(f), _declared_weight(g), merged_bound)
    declared_width = max(_declared_width(f), _declared_width(g))
    return BuiltNet(net, fn.depth + gn.depth, declared_width, declared_weight, name)


# ---------------------------------------------------------------------------
# Parallelization
# ---------------------------------------------------------------------------


def parallelize(
    nets: Sequence[NetLike],
    input_wiring: Sequence[Sequence[int]],
    input_dim: Optional[int] = None,
    name: str = "parallelize",
) -> BuiltNet:
    """Run several nets side by side; net i reads the input coordinates input_wiring[i]."""
    if not nets or len(nets) != len(input_wiring):
        raise ConfigError("parallelize needs one wiring list per network")
    indices = [int(i) for wiring in input_wiring for i in wiring]
    if input_dim is None:
        input_dim = max(indices) + 1 if indices else 0
    for k, (net, wiring) in enumerate(zip(nets, input_wiring)):
        base = unwrap(net)
        if len(wiring) != base.input_dim:
            raise ShapeError(f"net {k} reads {base.input_dim} inputs but is wired to {len(wiring)}")
        for i in wiring:
            if not 0 <= int(i) < input_dim:
                raise ConfigError(f"net {k}: input index {i} out of range for input dimension {input_dim}")
        if not math.isinf(base.truncation):
            raise ConfigError("parallelization requires untruncated networks")

    depth = max(unwrap(net).depth for net in nets)
    blocks: List[DenseReLUNet] = []
    for net in nets:
        base = unwrap(net)
        width = base.max_hidden_width if base.depth > 0 else 2 * base.output_dim
        blocks.append(pad(base, depth, width).net if depth > 0 else base)

    first_rows = []
    for block, wiring in zip(blocks, input_wiring):
        W = np.zeros((block.weights[0].shape[0], input_dim))
        for col, idx in enumerate(wiring):
            W[:, int(idx)] += block.weights[0][:, col]
        first_rows.append(W)
    weights = [np.vstack(first_rows)]
    biases = [np.concatenate([block.biases[0] for block in blocks])]
    for layer in range(1, depth + 1):
        weights.append(block_diag(*[block.weights[layer] for block in blocks]))
        biases.append(np.concatenate([block.biases[layer] for block in blocks]))
    net = DenseReLUNet(weights, biases)

    declared_width = sum(b.max_hidden_width for b in blocks)
    declared_weight = max(max(_declared_weight(n) for n in nets), 1.0 if depth > 0 else 0.0)
    return BuiltNet(net, depth, declared_width, declared_weight, name)
