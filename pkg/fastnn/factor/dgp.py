"""
Factor-model data generation: x = B f + u, y = m*(f, u_J) + eps.

Factors and idiosyncratic parts are independent with i.i.d. uniform coordinates
on [-a, a] and [-b, b]; loadings are i.i.d. Unif[-sqrt(3), sqrt(3)] unless given.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional, Tuple

import numpy as np
import pandas as pd

from fastnn.errors import ConfigError, ShapeError
from fastnn.factor.regression_fns import FAST_ACTIVE, additive, draw_assignment, regression_fast

logger = logging.getLogger(__name__)

REGRESSION_IDS = ("additive-random", "fast1", "fast2", "fanam-additive", "null")
FANAM_ACTIVE = 3
LOADING_BOUND = math.sqrt(3.0)


@dataclass(frozen=True)
class Sample:
    x: np.ndarray
    f: Optional[np.ndarray]
    u: Optional[np.ndarray]
    y: float
    eps: Optional[float]


@dataclass
class FactorSample:
    """Column-stacked samples. Latent arrays are None for observed data."""

    x: np.ndarray
    y: np.ndarray
    f: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    eps: Optional[np.ndarray] = None
    m_star: Optional[np.ndarray] = None

    def __post_init__(self) -> None:
        if self.x.ndim != 2 or self.y.shape != (self.x.shape[0],):
            raise ShapeError(f"x must be (n, p) and y (n,), got {self.x.shape} and {self.y.shape}")

    def __len__(self) -> int:
        return self.x.shape[0]

    def __getitem__(self, i: int) -> Sample:
        return Sample(
            x=self.x[i],
            f=None if self.f is None else self.f[i],
            u=None if self.u is None else self.u[i],
            y=float(self.y[i]),
            eps=None if self.eps is None else float(self.eps[i]),
        )

    def __iter__(self) -> Iterator[Sample]:
        for i in range(len(self)):
            yield self[i]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    @property
    def has_truth(self) -> bool:
        return self.f is not None and self.m_star is not None

    def subset(self, idx: np.ndarray) -> "FactorSample":
        def take(a):
            return None if a is None else a[idx]

        return FactorSample(self.x[idx], self.y[idx], take(self.f), take(self.u), take(self.eps), take(self.m_star))


@dataclass
class FactorDgp:
    p: int
    r: int
    loading: np.ndarray
    regression_fn: str = "additive-random"
    noise_var: float = 0.3
    factor_bound: float = 1.0
    idio_bound: float = 1.0
    assignment: Tuple[str, ...] = ()
    idio_assignment: Tuple[str, ...] = ()
    seed: int = 0

    def __post_init__(self) -> None:
        if self.regression_fn not in REGRESSION_IDS:
            raise ConfigError(f"unknown regression_fn {self.regression_fn!r}; expected one of {REGRESSION_IDS}")
        if self.loading.shape != (self.p, self.r):
            raise ShapeError(f"loading must be {self.p}x{self.r}, got {self.loading.shape}")
        if self.noise_var < 0:
            raise ConfigError(f"noise_var must be nonnegative, got {self.noise_var}")
        if self.regression_fn in ("fast1", "fast2") and (self.r != 4 or self.p < FAST_ACTIVE):
            raise ConfigError("fast regressions need r = 4 factors and p >= 5")
        if self.regression_fn == "fanam-additive" and self.p < FANAM_ACTIVE:
            raise ConfigError(f"fanam-additive needs p >= {FANAM_ACTIVE}")

    @classmethod
    def create(
        cls,
        p: int,
        r: int,
        regression_fn: str = "additive-random",
        noise_var: float = 0.3,
        seed: int = 0,
        factor_bound: float = 1.0,
        idio_bound: float = 1.0,
        loading: Optional[np.ndarray] = None,
    ) -> "FactorDgp":
        if p < 1 or r < 1:
            raise ConfigError(f"need p >= 1 and r >= 1, got p={p}, r={r}")
        rng = np.random.default_rng(np.random.SeedSequence([seed, 0]))
        if loading is None:
            loading = rng.uniform(-LOADING_BOUND, LOADING_BOUND, size=(p, r))
        assignment: Tuple[str, ...] = ()
        idio_assignment: Tuple[str, ...] = ()
        if regression_fn in ("additive-random", "fanam-additive"):
            assignment = draw_assignment(r, rng)
        if regression_fn == "fanam-additive":
            idio_assignment = draw_assignment(FANAM_ACTIVE, rng)
        return cls(
            p=p, r=r, loading=np.asarray(loading, dtype=float), regression_fn=regression_fn,
            noise_var=noise_var, factor_bound=factor_bound, idio_bound=idio_bound,
            assignment=assignment, idio_assignment=idio_assignment, seed=seed,
        )

    @property
    def important_coords(self) -> Tuple[int, ...]:
        """Zero-based idiosyncratic coordinates entering m*."""
        if self.regression_fn in ("fast1", "fast2"):
            return tuple(range(FAST_ACTIVE))
        if self.regression_fn == "fanam-additive":
            return tuple(range(FANAM_ACTIVE))
        return ()

    def regression(self, f: np.ndarray, u: np.ndarray) -> np.ndarray:
        kind = self.regression_fn
        if kind == "additive-random":
            return additive(f, self.assignment)
        if kind == "fast1":
            return regression_fast(1, f, u)
        if kind == "fast2":
            return regression_fast(2, f, u)
        if kind == "fanam-additive":
            return additive(f, self.assignment) + additive(u[..., :FANAM_ACTIVE], self.idio_assignment)
        return np.zeros(np.shape(f)[:-1])


def generate(dgp: FactorDgp, n: int, rng: Optional[np.random.Generator] = None) -> FactorSample:
    """Draw n i.i.d. samples. Without rng, draws are seeded from dgp.seed."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    if rng is None:
        rng = np.random.default_rng(np.random.SeedSequence([dgp.seed, 1]))
    f = rng.uniform(-dgp.factor_bound, dgp.factor_bound, size=(n, dgp.r))
    u = rng.uniform(-dgp.idio_bound, dgp.idio_bound, size=(n, dgp.p))
    eps = rng.normal(0.0, math.sqrt(dgp.noise_var), size=n) if dgp.noise_var > 0 else np.zeros(n)
    x = f @ dgp.loading.T + u
    m_star = dgp.regression(f, u)
    return FactorSample(x=x, y=m_star + eps, f=f, u=u, eps=eps, m_star=m_star)


def export_dataset_csv(sample: FactorSample, stem: Path) -> Tuple[Path, Optional[Path]]:
    """Write x columns then y to <stem>.csv and latent truth to <stem>_latent.csv."""
    stem = Path(stem)
    stem.parent.mkdir(parents=True, exist_ok=True)
    data = pd.DataFrame(sample.x, columns=[f"x{j + 1}" for j in range(sample.p)])
    data["y"] = sample.y
    data_path = stem.with_suffix(".csv")
    data.to_csv(data_path, index=False)
    if not sample.has_truth:
        return data_path, None
    latent = pd.DataFrame(sample.f, columns=[f"f{j + 1}" for j in range(sample.f.shape[1])])
    latent = pd.concat([latent, pd.DataFrame(sample.u, columns=[f"u{j + 1}" for j in range(sample.p)])], axis=1)
    latent["eps"] = sample.eps
    latent["m_star"] = sample.m_star
    latent_path = stem.parent / f"{stem.name}_latent.csv"
    latent.to_csv(latent_path, index=False)
    logger.info("wrote %d samples to %s", len(sample), data_path)
    return data_path, latent_path
