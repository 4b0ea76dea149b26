from __future__ import annotations

from typing import Callable, Dict, Sequence, Tuple

import numpy as np

from fastnn.errors import ConfigError, ShapeError

# Candidate component functions for additive regression targets
CANDIDATES: Dict[str, Callable[[np.ndarray], np.ndarray]] = {
    "cos": lambda x: np.cos(np.pi * x),
    "sin": np.sin,
    "sq": lambda x: (1.0 - np.abs(x)) ** 2,
    "sigmoid": lambda x: 1.0 / (1.0 + np.exp(-x)),
    "sqrt": lambda x: 2.0 * np.sqrt(np.abs(x)) - 1.0,
}
CANDIDATE_IDS: Tuple[str, ...] = tuple(CANDIDATES)

FAST_ACTIVE = 5


def draw_assignment(count: int, rng: np.random.Generator) -> Tuple[str, ...]:
    picks = rng.integers(0, len(CANDIDATE_IDS), size=count)
    return tuple(CANDIDATE_IDS[int(i)] for i in picks)


def additive(values: np.ndarray, assignment: Sequence[str]) -> np.ndarray:
    """sum_j m_j(values[..., j]) with m_j = CANDIDATES[assignment[j]]."""
    values = np.asarray(values, dtype=float)
    if values.shape[-1] != len(assignment):
        raise ShapeError(f"assignment covers {len(assignment)} coordinates, got {values.shape[-1]}")
    total = np.zeros(values.shape[:-1])
    for j, name in enumerate(assignment):
        if name not in CANDIDATES:
            raise ConfigError(f"unknown candidate function {name!r}")
        total = total + CANDIDATES[name](values[..., j])
    return total


def regression_additive_random(f: np.ndarray, assignment: Sequence[str]) -> np.ndarray:
    return additive(f, assignment)


def regression_fast(kind: int, f: np.ndarray, u: np.ndarray) -> np.ndarray:
    """The two sparse-throughput targets on four factors and the first five idiosyncratic coordinates."""
    f = np.asarray(f, dtype=float)
    u = np.asarray(u, dtype=float)
    if f.shape[-1] != 4 or u.shape[-1] < FAST_ACTIVE:
        raise ShapeError(f"fast regressions need 4 factors and >= 5 idiosyncratic coordinates, got {f.shape}, {u.shape}")
    f1, f2, f3, f4 = (f[..., i] for i in range(4))
    u1, u2, u3, u4, u5 = (u[..., i] for i in range(FAST_ACTIVE))
    if kind == 1:
        return (f1 - f2 + f3 - f4) + (-u1 + u2 - u3 + u4 - u5)
    if kind == 2:
        return (
            f1 * f2 ** 2
            - f3
            + np.log(8.0 + f4 + 4.0 * u1 + np.exp(u2 * u3 - 5.0 * u1))
            + np.tan(u4 + 0.1)
            + np.sin(u5)
        )
    raise ConfigError(f"fast regression kind must be 1 or 2, got {kind}")
