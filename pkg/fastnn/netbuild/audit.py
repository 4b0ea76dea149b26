"""
Contract audit: build every construction over a parameter grid and compare the
declared (depth, width, weight, error) budgets with what the built network does.
"""

from __future__ import annotations

import logging
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from fastnn.errors import ConfigError, FastNnError
from fastnn.netbuild.algebra import BuiltNet
from fastnn.netbuild.gadgets import (
    build_index_creator,
    build_mid,
    build_multiply,
    cell_index,
    extend_by_mid,
    fit_piecewise_linear,
    fit_points_1d,
    gadget,
    grid_side,
    multiply_error_bound,
)
from fastnn.nets.relu_net import forward

logger = logging.getLogger(__name__)

EXACT_TOL = 1e-8
FAULTS = ("multiply-depth",)

DEFAULT_GRID: Dict[str, List[Any]] = {
    "gadget": ["identity", "abs", "min2", "max2"],
    "piecewise": [3, 10, 50],
    "points_1d": [[2, 2, 0.1], [4, 4, 0.05]],
    "index_creator": [[1, 2, 1.0 / 24], [2, 4, 1.0 / 24]],
    "mid": [True],
    "multiply": [[4, 3, -1.0, 1.0], [2, 2, 0.0, 1.0], [3, 1, -2.0, 0.5]],
    "extend_by_mid": [[1, 2, 1.0 / 24]],
}


@dataclass
class AuditRow:
    construction: str
    params: str
    quantity: str
    declared: float
    measured: float
    ok: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _budget_rows(built: BuiltNet, params: str, depth_shift: int = 0) -> List[AuditRow]:
    declared_depth = built.declared_depth + depth_shift
    return [
        AuditRow(built.name, params, "depth", declared_depth, built.depth, built.depth <= declared_depth),
        AuditRow(built.name, params, "width", built.declared_width, built.width, built.width <= built.declared_width),
        AuditRow(
            built.name, params, "max_weight", built.declared_weight, built.max_weight,
            built.max_weight <= built.declared_weight * (1 + 1e-9) + 1e-9,
        ),
    ]


def _error_row(name: str, params: str, bound: float, measured: float) -> AuditRow:
    return AuditRow(name, params, "sup_error", bound, measured, bool(measured <= bound))


# ---------------------------------------------------------------------------
# Per-construction checks
# ---------------------------------------------------------------------------


def _audit_gadget(kind: str, rng: np.random.Generator) -> List[AuditRow]:
    built = gadget(kind)
    if kind in ("identity", "abs"):
        x = rng.uniform(-5, 5, size=(200, 1))
        want = x[:, 0] if kind == "identity" else np.abs(x[:, 0])
    else:
        x = rng.uniform(-5, 5, size=(200, 2))
        want = x.min(axis=1) if kind == "min2" else x.max(axis=1)
    err = float(np.max(np.abs(forward(built.net, x)[:, 0] - want)))
    return _budget_rows(built, kind) + [_error_row(built.name, kind, EXACT_TOL, err)]


def _audit_piecewise(n_points: int, rng: np.random.Generator) -> List[AuditRow]:
    xs = np.sort(rng.choice(np.linspace(0.0, 1.0, 1001), size=n_points, replace=False))
    ys = rng.uniform(-1, 1, size=n_points)
    built = fit_piecewise_linear(list(zip(xs, ys)))
    err = float(np.max(np.abs(forward(built.net, xs[:, None])[:, 0] - ys)))
    params = f"points={n_points}"
    return _budget_rows(built, params) + [_error_row(built.name, params, EXACT_TOL, err)]


def _audit_points_1d(n_blocks: int, block_size: int, delta: float, rng: np.random.Generator) -> List[AuditRow]:
    count = n_blocks * block_size
    slack = 1.0 - delta * (count - 1)
    if slack < 0:
        raise ConfigError(f"{count} points with gap {delta} do not fit in [0, 1]")
    extra = np.sort(rng.uniform(0, slack, size=count))
    xs = np.arange(count) * delta + extra
    ys = rng.uniform(0, 1, size=count)
    built = fit_points_1d(list(zip(xs, ys)), n_blocks, block_size, delta)
    err = float(np.max(np.abs(forward(built.net, xs[:, None])[:, 0] - ys)))
    params = f"N1={n_blocks},N2={block_size},delta={delta:.6g}"
    rows = _budget_rows(built, params) + [_error_row(built.name, params, EXACT_TOL, err)]
    edge = max(float(np.max(np.abs(built.net.weights[0]))), float(np.max(np.abs(built.net.weights[-1]))))
    rows.append(AuditRow(built.name, params, "outer_weight", 1.0, edge, edge <= 1.0))
    return rows


def good_region_samples(d: int, K: int, delta: float, per_cell: int, rng: np.random.Generator) -> np.ndarray:
    """per_cell random points inside the good part of every cell of the K^d grid."""
    cells = np.stack(np.meshgrid(*[np.arange(K)] * d, indexing="ij"), axis=-1).reshape(-1, d)
    lo = cells / K
    hi = (cells + 1) / K - delta * (cells + 1 < K)
    draws = rng.uniform(size=(cells.shape[0], per_cell, d))
    points = lo[:, None, :] + draws * (hi - lo)[:, None, :]
    points[:, 0, :] = lo
    return points.reshape(-1, d)


def _audit_index_creator(d: int, N: int, delta: float, rng: np.random.Generator) -> List[AuditRow]:
    built = build_index_creator(d, N, delta)
    K = grid_side(d, N) ** 2
    x = good_region_samples(d, K, delta, 5, rng)
    want = cell_index(x, K, delta) / K
    err = float(np.max(np.abs(forward(built.net, x) - want)))
    params = f"d={d},N={N},delta={delta:.6g}"
    return _budget_rows(built, params) + [_error_row(built.name, params, EXACT_TOL, err)]


def _audit_mid(rng: np.random.Generator) -> List[AuditRow]:
    built = build_mid()
    x = rng.uniform(-10, 10, size=(1000, 3))
    err = float(np.max(np.abs(forward(built.net, x)[:, 0] - np.median(x, axis=1))))
    return _budget_rows(built, "-") + [_error_row(built.name, "-", EXACT_TOL, err)]


def multiply_grid_error(built: BuiltNet, a: float, b: float, points: int = 41) -> float:
    axis = np.linspace(a, b, points)
    xx, yy = np.meshgrid(axis, axis, indexing="ij")
    grid = np.column_stack([xx.ravel(), yy.ravel()])
    return float(np.max(np.abs(forward(built.net, grid)[:, 0] - grid[:, 0] * grid[:, 1])))


def _audit_multiply(N: int, L: int, a: float, b: float, fault: Optional[str]) -> List[AuditRow]:
    built = build_multiply(N, L, a, b)
    params = f"N={N},L={L},a={a:g},b={b:g}"
    shift = -1 if fault == "multiply-depth" else 0
    err = multiply_grid_error(built, a, b)
    return _budget_rows(built, params, depth_shift=shift) + [
        _error_row(built.name, params, multiply_error_bound(N, L, a, b), err)
    ]


def _audit_extend(d: int, N: int, delta: float, rng: np.random.Generator) -> List[AuditRow]:
    index = build_index_creator(d, N, delta)
    K = grid_side(d, N) ** 2
    # scalar target: the first coordinate's cell value
    first = index.net.with_parameters(index.net.parameters())
    first.weights[-1] = first.weights[-1][:1]
    first.biases[-1] = first.biases[-1][:1]
    built = extend_by_mid(first, d, delta)
    x = good_region_samples(d, K, delta, 5, rng)
    err = float(np.max(np.abs(forward(built.net, x)[:, 0] - forward(first, x)[:, 0])))
    params = f"d={d},N={N},delta={delta:.6g}"
    expected_depth = first.depth + 2 * d
    rows = _budget_rows(built, params) + [_error_row(built.name, params, EXACT_TOL, err)]
    rows.append(AuditRow(built.name, params, "depth_growth", expected_depth, built.depth, built.depth == expected_depth))
    return rows


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


def run_audit(grid: Optional[Dict[str, Sequence[Any]]] = None, seed: int = 0, fault: Optional[str] = None) -> List[AuditRow]:
    """Evaluate every construction listed in grid. Unknown grid sections are a config error."""
    if fault is not None and fault not in FAULTS:
        raise ConfigError(f"unknown fault {fault!r}; expected one of {', '.join(FAULTS)}")
    grid = DEFAULT_GRID if grid is None else grid
    unknown = set(grid) - set(DEFAULT_GRID)
    if unknown:
        raise ConfigError(f"unknown audit section(s): {', '.join(sorted(unknown))}")
    rng = np.random.default_rng(seed)

    runners: Dict[str, Callable[[Any], List[AuditRow]]] = {
        "gadget": lambda kind: _audit_gadget(str(kind), rng),
        "piecewise": lambda n: _audit_piecewise(int(n), rng),
        "points_1d": lambda e: _audit_points_1d(int(e[0]), int(e[1]), float(e[2]), rng),
        "index_creator": lambda e: _audit_index_creator(int(e[0]), int(e[1]), float(e[2]), rng),
        "mid": lambda _: _audit_mid(rng),
        "multiply": lambda e: _audit_multiply(int(e[0]), int(e[1]), float(e[2]), float(e[3]), fault),
        "extend_by_mid": lambda e: _audit_extend(int(e[0]), int(e[1]), float(e[2]), rng),
    }
    rows: List[AuditRow] = []
    for section, entries in grid.items():
        for entry in entries:
            try:
                rows.extend(runners[section](entry))
            except FastNnError as exc:
                logger.error("audit %s %r failed: %s", section, entry, exc)
                rows.append(AuditRow(section, repr(entry), "construction", 0.0, 1.0, False))
    failed = sum(not row.ok for row in rows)
    logger.info("netbuild audit: %d rows, %d violations", len(rows), failed)
    return rows


def violations(rows: Iterable[AuditRow]) -> List[AuditRow]:
    return [row for row in rows if not row.ok]


def summarize_rows(rows: Sequence[AuditRow]) -> Tuple[int, int]:
    return len(rows), len(violations(rows))
