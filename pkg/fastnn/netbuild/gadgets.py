"""
Explicit ReLU constructions with exact (depth, width, weight) budgets.

Each builder returns a BuiltNet; the budget check runs when the BuiltNet is
created, so an over-budget construction never leaves this module.
"""

from __future__ import annotations

import logging
from typing import List, Sequence, Tuple

import numpy as np

from fastnn.errors import ConfigError, InputError
from fastnn.netbuild.algebra import BuiltNet, NetLike, unwrap, compose, from_layers, parallelize
from fastnn.nets.relu_net import DenseReLUNet

logger = logging.getLogger(__name__)

Point = Tuple[float, float]

_GADGET_ROWS = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])


# ---------------------------------------------------------------------------
# Identity, absolute value, min, max
# ---------------------------------------------------------------------------


def gadget(kind: str) -> BuiltNet:
    if kind == "identity":
        net = from_layers([[[1.0], [-1.0]], [[1.0, -1.0]]], [[0.0, 0.0], [0.0]])
        return BuiltNet(net, 1, 2, 1.0, kind)
    if kind == "abs":
        net = from_layers([[[1.0], [-1.0]], [[1.0, 1.0]]], [[0.0, 0.0], [0.0]])
        return BuiltNet(net, 1, 2, 1.0, kind)
    if kind in ("min2", "max2"):
        sign = -1.0 if kind == "min2" else 1.0
        out = 0.5 * np.array([[1.0, -1.0, sign, sign]])
        net = from_layers([_GADGET_ROWS, out], [np.zeros(4), np.zeros(1)])
        return BuiltNet(net, 1, 4, 1.0, kind)
    raise ConfigError(f"unknown gadget {kind!r}; expected identity, abs, min2 or max2")


# ---------------------------------------------------------------------------
# Piecewise linear interpolation
# ---------------------------------------------------------------------------


def _check_points(points: Sequence[Point], min_gap: float = 0.0) -> Tuple[np.ndarray, np.ndarray]:
    arr = np.asarray(points, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2 or arr.shape[0] < 2:
        raise InputError("need at least two (x, y) points")
    xs, ys = arr[:, 0], arr[:, 1]
    if np.any(xs < 0.0) or np.any(xs > 1.0):
        bad = int(np.flatnonzero((xs < 0.0) | (xs > 1.0))[0])
        raise InputError(f"knot x={xs[bad]} lies outside [0, 1]", row=bad)
    gaps = np.diff(xs)
    floor = max(min_gap, 0.0)
    violations = np.flatnonzero(gaps <= 0.0) if floor == 0.0 else np.flatnonzero(gaps < floor * (1.0 - 1e-12))
    if violations.size:
        i = int(violations[0]) + 1
        if floor == 0.0:
            raise InputError(f"knots must be strictly increasing: x[{i}]={xs[i]} after x[{i - 1}]={xs[i - 1]}", row=i)
        raise InputError(f"gap x[{i}]-x[{i - 1}]={gaps[i - 1]:.3g} is below delta={floor:.3g}", row=i)
    return xs, ys


def _hinge_coefficients(knots: np.ndarray, values: np.ndarray) -> Tuple[np.ndarray, float]:
    """Coefficients w and constant c with sum_j w_j s(x - knots[j]) + c interpolating values."""
    slopes = np.diff(values) / np.diff(knots)
    w = np.empty_like(slopes)
    w[0] = slopes[0]
    w[1:] = np.diff(slopes)
    return w, float(values[0])


def fit_piecewise_linear(points: Sequence[Point]) -> BuiltNet:
    """Depth-1 net through N+1 knots, linear between consecutive knots."""
    xs, ys = _check_points(points)
    w, c = _hinge_coefficients(xs, ys)
    n = w.size
    net = from_layers([np.ones((n, 1)), w[None, :]], [-xs[:-1], np.array([c])])
    slopes = np.abs(np.diff(ys) / np.diff(xs))
    declared = max(2.0 * float(slopes.max()), float(np.max(np.abs(xs))), abs(c))
    return BuiltNet(net, 1, n, declared, "piecewise-linear")


# ---------------------------------------------------------------------------
# Exact fitting of N1*N2 points with three hidden layers
# ---------------------------------------------------------------------------


def _point_fit(xs: np.ndarray, ys: np.ndarray, n_blocks: int, block_size: int, delta: float, name: str) -> BuiltNet:
    # block endpoints carry the coarse interpolant g0; interior points get hats
    ends = sorted({j * block_size for j in range(n_blocks)} | {(j + 1) * block_size - 1 for j in range(n_blocks)})
    ends = np.array(ends)
    knots = xs[ends]
    hinge_knots = knots[:-1]
    n_hinges = hinge_knots.size

    w0, c0 = _hinge_coefficients(knots, ys[ends])
    g0_at = np.interp(xs, knots, ys[ends])

    hat_rows: List[np.ndarray] = []
    hat_consts: List[float] = []
    n_inner = block_size - 2
    for k in range(1, block_size - 1):
        for sign in (1.0, -1.0):
            rising = np.zeros(knots.size)
            falling = np.zeros(knots.size)
            for j in range(n_blocks):
                i = j * block_size + k
                height = max(sign * (ys[i] - g0_at[i]), 0.0)
                if height == 0.0:
                    continue
                rise = height / (xs[i] - xs[i - 1])
                fall = height / (xs[i + 1] - xs[i])
                lo, hi = 2 * j, 2 * j + 1
                rising[lo] = rise * (knots[lo] - xs[i - 1])
                rising[hi] = rise * (knots[hi] - xs[i - 1])
                falling[lo] = fall * (xs[i + 1] - knots[lo])
                falling[hi] = fall * (xs[i + 1] - knots[hi])
            for values in (rising, falling):
                w, c = _hinge_coefficients(knots, values)
                hat_rows.append(w)
                hat_consts.append(c)

    W1 = np.ones((n_hinges, 1))
    b1 = -hinge_knots

    W2 = np.vstack(hat_rows + [w0, -w0]) if hat_rows else np.vstack([w0, -w0])
    b2 = np.array(hat_consts + [c0, -c0])

    width3 = 8 * n_inner + 2
    W3 = np.zeros((width3, W2.shape[0]))
    W4 = np.zeros((1, width3))
    for k in range(n_inner):
        for part, sign in enumerate((1.0, -1.0)):
            src = 4 * k + 2 * part
            dst = 8 * k + 4 * part
            W3[dst:dst + 4, src:src + 2] = _GADGET_ROWS
            W4[0, dst:dst + 4] = sign * 0.5 * np.array([1.0, -1.0, -1.0, -1.0])
    W3[-2, -2:] = [1.0, -1.0]
    W3[-1, -2:] = [-1.0, 1.0]
    W4[0, -2:] = [1.0, -1.0]

    net = from_layers([W1, W2, W3, W4], [b1, b2, np.zeros(width3), np.zeros(1)])
    width = max(n_hinges, W2.shape[0], width3)
    return BuiltNet(net, 3, width, 4.0 / delta ** 2, name)


def fit_points_1d(points: Sequence[Point], n_blocks: int, block_size: int, delta: float) -> BuiltNet:
    """Interpolate n_blocks * block_size points whose x-gaps are at least delta.

    Hidden widths are (2*n_blocks - 1, 4*(block_size - 2) + 2, 8*(block_size - 2) + 2)
    and every weight is bounded by 4 / delta**2.
    """
    if n_blocks < 2 or block_size < 2:
        raise ConfigError(f"need at least 2 blocks of at least 2 points, got {n_blocks} x {block_size}")
    if delta <= 0:
        raise ConfigError(f"delta must be positive, got {delta}")
    if len(points) != n_blocks * block_size:
        raise InputError(f"expected {n_blocks * block_size} points, got {len(points)}")
    xs, ys = _check_points(points, min_gap=delta)
    if np.any(ys < 0.0) or np.any(ys > 1.0):
        bad = int(np.flatnonzero((ys < 0.0) | (ys > 1.0))[0])
        raise InputError(f"value y={ys[bad]} lies outside [0, 1]", row=bad)
    return _point_fit(xs, ys, n_blocks, block_size, delta, "point-fit-1d")


# ---------------------------------------------------------------------------
# Index creation on the unit cube
# ---------------------------------------------------------------------------


def grid_side(d: int, N: int) -> int:
    """Largest T with T**d <= N."""
    if d < 1 or N < 1:
        raise ConfigError(f"need d >= 1 and N >= 1, got d={d}, N={N}")
    T = max(int(round(N ** (1.0 / d))), 1)
    while T ** d > N:
        T -= 1
    while (T + 1) ** d <= N:
        T += 1
    return T


def _step_net(T: int, delta: float) -> BuiltNet:
    K = T * T
    xs, ys = [], []
    for k in range(K):
        xs.extend([k / K, 1.0 if k == K - 1 else (k + 1) / K - delta])
        ys.extend([k / K, k / K])
    return _point_fit(np.array(xs), np.array(ys), T, 2 * T, delta, "step")


def build_index_creator(d: int, N: int, delta: float) -> BuiltNet:
    """Map every x in the good region of cell l of the K^d grid to l / K, K = floor(N^(1/d))^2."""
    T = grid_side(d, N)
    K = T * T
    if not 0.0 < delta <= 1.0 / (3 * K):
        raise ConfigError(f"delta must lie in (0, 1/(3K)] = (0, {1.0 / (3 * K):.6g}] for K={K}, got {delta}")
    step = _step_net(T, delta)
    combined = parallelize([step] * d, [[j] for j in range(d)], input_dim=d, name="index-creator")
    return BuiltNet(combined.net, 3, 16 * N * d, 4.0 / delta ** 2, "index-creator")


def cell_index(x: np.ndarray, K: int, delta: float) -> np.ndarray:
    """Cell multi-index of points in the good region; -1 marks coordinates in a gap."""
    x = np.asarray(x, dtype=float)
    idx = np.minimum(np.floor(x * K).astype(int), K - 1)
    upper = (idx + 1) / K - delta * (idx + 1 < K)
    return np.where(x <= upper + 1e-15, idx, -1)


# ---------------------------------------------------------------------------
# Median of three
# ---------------------------------------------------------------------------


def build_mid() -> BuiltNet:
    """Median of (a, b, c) as (a + b + c) - max3 - min3 with two hidden layers."""
    # layer 1: pair units for (a, b), then c and s = a + b + c through the identity gadget
    W1 = np.zeros((8, 3))
    W1[0:4, 0:2] = _GADGET_ROWS
    W1[4, 2], W1[5, 2] = 1.0, -1.0
    W1[6, :], W1[7, :] = 1.0, -1.0
    pair_max = 0.5 * np.array([1.0, -1.0, 1.0, 1.0])
    pair_min = 0.5 * np.array([1.0, -1.0, -1.0, -1.0])
    c_lin = np.array([1.0, -1.0])

    # layer 2: max(max_ab, c), min(min_ab, c), pass s
    W2 = np.zeros((10, 8))
    for offset, pair in ((0, pair_max), (4, pair_min)):
        for row, (sp, sc) in enumerate(((1.0, 1.0), (-1.0, -1.0), (1.0, -1.0), (-1.0, 1.0))):
            W2[offset + row, 0:4] = sp * pair
            W2[offset + row, 4:6] = sc * c_lin
    W2[8, 6:8] = [1.0, -1.0]
    W2[9, 6:8] = [-1.0, 1.0]

    W3 = np.zeros((1, 10))
    W3[0, 0:4] = -0.5 * np.array([1.0, -1.0, 1.0, 1.0])
    W3[0, 4:8] = -0.5 * np.array([1.0, -1.0, -1.0, -1.0])
    W3[0, 8:10] = [1.0, -1.0]
    net = from_layers([W1, W2, W3], [np.zeros(8), np.zeros(10), np.zeros(1)])
    return BuiltNet(net, 2, 14, 1.0, "mid")


# ---------------------------------------------------------------------------
# Multiplication on [a, b]^2
# ---------------------------------------------------------------------------


def multiply_error_bound(N: int, L: int, a: float, b: float) -> float:
    return 6.0 * (b - a) ** 2 * float(N) ** (-L)


def build_multiply(N: int, L: int, a: float, b: float) -> BuiltNet:
    """Approximate xy on [a, b]^2 via polarization and sawtooth square refinement.

    Both squares are evaluated on [0, 1] after the affine maps
    u = (x + y - 2a) / (2(b - a)) and v = (x - y + b - a) / (2(b - a)); level s of
    the refinement replaces the interpolant of t^2 on a grid of spacing N^-s by
    the one on spacing N^-(s+1). A running total carries the product estimate.
    """
    if N < 1 or L < 1:
        raise ConfigError(f"need N >= 1 and L >= 1, got N={N}, L={L}")
    if not a < b:
        raise ConfigError(f"need a < b, got a={a}, b={b}")
    B = N
    span = b - a
    grid = np.arange(B) / B
    zig = np.array([float(B)] + [(-1.0) ** j * 2.0 * B for j in range(1, B)])
    bump = np.array([1.0 - 1.0 / B] + [-2.0 / B] * (B - 1))

    width = 2 * B + 2
    scale = 1.0 / (2.0 * span)
    const = a * a - span * span / 4.0
    W = np.zeros((width, 2))
    bias = np.zeros(width)
    W[0:B, :] = [scale, scale]
    bias[0:B] = -a / span - grid
    W[B:2 * B, :] = [scale, -scale]
    bias[B:2 * B] = 0.5 - grid
    total_w = np.array([(a + b) / 2.0, (a + b) / 2.0])
    total_b = const - a * (a + b)
    W[2 * B] = total_w
    bias[2 * B] = total_b
    W[2 * B + 1] = -total_w
    bias[2 * B + 1] = -total_b
    weights, biases = [W], [bias]

    u_cols, v_cols, t_cols = slice(0, B), slice(B, 2 * B), slice(2 * B, 2 * B + 2)

    def total_row(level: int) -> np.ndarray:
        row = np.zeros(width)
        row[t_cols] = [1.0, -1.0]
        gain = span * span * float(B) ** (-2 * level)
        row[u_cols] = -gain * bump
        row[v_cols] = gain * bump
        return row

    for level in range(L - 1):
        W = np.zeros((width, width))
        bias = np.zeros(width)
        W[0:B, u_cols] = zig[None, :]
        W[B:2 * B, v_cols] = zig[None, :]
        bias[0:B] = -grid
        bias[B:2 * B] = -grid
        row = total_row(level)
        W[2 * B] = row
        W[2 * B + 1] = -row
        weights.append(W)
        biases.append(bias)
    weights.append(total_row(L - 1)[None, :])
    biases.append(np.zeros(1))

    net = from_layers(weights, biases)
    reach = abs(a) + abs(b)
    declared = max(3.0 * N * N * max(reach * reach, 1.0), (reach + 1.0) / span + 1.0)
    return BuiltNet(net, L, 9 * N + 1, declared, "multiply")


# ---------------------------------------------------------------------------
# Extension from the good region by coordinatewise medians
# ---------------------------------------------------------------------------


def _shift_input(net: DenseReLUNet, shift: np.ndarray) -> DenseReLUNet:
    """x -> net(x + shift)."""
    biases = [b.copy() for b in net.biases]
    biases[0] = biases[0] + net.weights[0] @ shift
    return DenseReLUNet([W.copy() for W in net.weights], biases, truncation=net.truncation)


def extend_by_mid(g: NetLike, d: int, delta: float) -> BuiltNet:
    """phi_{j+1}(x) = mid(phi_j(x - delta e_j), phi_j(x), phi_j(x + delta e_j)) for j = 1..d."""
    base = unwrap(g)
    if base.input_dim != d or base.output_dim != 1:
        raise ConfigError(f"extend_by_mid needs a scalar net on R^{d}, got {base.input_dim} -> {base.output_dim}")
    mid = build_mid()
    phi: NetLike = g
    wiring = [list(range(d))] * 3
    for j in range(d):
        step = np.zeros(d)
        step[j] = delta
        current = unwrap(phi)
        copies = [_shift_input(current, -step), current, _shift_input(current, step)]
        stacked = parallelize(copies, wiring, input_dim=d, name=f"mid-round-{j + 1}")
        phi = compose(stacked, mid, name="extend-by-mid")
    logger.debug("extend_by_mid: depth %d, width %d", phi.depth, phi.width)
    return phi
