"""
Linear baselines: minimum-norm least squares, Lasso, PCR and a factor-plus-sparse
two-stage fit (farm-lite).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence, Tuple

import numpy as np
from scipy import linalg

from fastnn.errors import ConfigError, NumericError, ShapeError
from fastnn.factor.dgp import FactorSample

logger = logging.getLogger(__name__)

LINEAR_METHODS = ("min-l2", "lasso", "pcr", "farm-lite")
COND_LIMIT = 1e12
JITTER = 1e-10


@dataclass
class FittedLinear:
    coef: np.ndarray
    intercept: float = 0.0
    method: str = "lasso"
    converged: bool = True
    extra: Dict[str, Any] = field(default_factory=dict)

    inputs = "x"

    @property
    def kind(self) -> str:
        return self.method

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        if x.shape[1] != self.coef.shape[0]:
            raise ShapeError(f"model expects {self.coef.shape[0]} covariates, got {x.shape[1]}")
        return x @ self.coef + self.intercept

    def features(self, batch: FactorSample) -> np.ndarray:
        return batch.x

    def predict_batch(self, batch: FactorSample) -> np.ndarray:
        return self.predict(batch.x)

    def to_dict(self) -> dict:
        return {
            "kind": self.method,
            "coef": self.coef.tolist(),
            "intercept": self.intercept,
            "converged": self.converged,
            "extra": self.extra,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FittedLinear":
        return cls(
            coef=np.asarray(data["coef"], dtype=float),
            intercept=float(data.get("intercept", 0.0)),
            method=data["kind"],
            converged=bool(data.get("converged", True)),
            extra=dict(data.get("extra", {})),
        )


def _check_xy(X, y) -> Tuple[np.ndarray, np.ndarray]:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ShapeError(f"need X (n, p) and y (n,), got {X.shape} and {y.shape}")
    if X.shape[0] == 0:
        raise ShapeError("no samples")
    return X, y


def soft_threshold(z, lam: float):
    return np.sign(z) * np.maximum(np.abs(z) - lam, 0.0)


# ---------------------------------------------------------------------------
# Minimum-norm least squares
# ---------------------------------------------------------------------------


def fit_min_l2(X, y) -> FittedLinear:
    """beta = X^T (X X^T)^-1 y, the interpolating solution of least norm."""
    X, y = _check_xy(X, y)
    gram = X @ X.T
    jittered = False
    if np.linalg.cond(gram) > COND_LIMIT:
        gram = gram + JITTER * np.eye(gram.shape[0])
        jittered = True
    try:
        alpha = linalg.solve(gram, y, assume_a="pos")
    except (linalg.LinAlgError, ValueError) as exc:
        raise NumericError(f"Gram matrix X X^T is singular: {exc}") from exc
    coef = X.T @ alpha
    if not np.all(np.isfinite(coef)):
        raise NumericError("minimum-norm solution is not finite")
    return FittedLinear(coef, 0.0, "min-l2", True, {"jittered": jittered})


# ---------------------------------------------------------------------------
# Lasso by cyclic coordinate descent
# ---------------------------------------------------------------------------


def lasso_lambda_max(X, y, fit_intercept: bool = True) -> float:
    """Smallest lambda at which every coefficient is zero."""
    X, y = _check_xy(X, y)
    if fit_intercept:
        X = X - X.mean(axis=0)
        y = y - y.mean()
    return float(np.max(np.abs(X.T @ y)) / X.shape[0])


def fit_lasso(
    X,
    y,
    lam: float,
    standardize: bool = True,
    fit_intercept: bool = True,
    tol: float = 1e-8,
    max_sweeps: int = 10_000,
) -> FittedLinear:
    """Minimize (2n)^-1 ||y - X beta - b||^2 + lam ||beta||_1.

    With standardize the columns are scaled to unit variance during the fit and
    coefficients are mapped back, so lam applies on the standardized scale.
    """
    if lam < 0:
        raise ConfigError(f"lasso lambda must be nonnegative, got {lam}")
    X, y = _check_xy(X, y)
    n, p = X.shape
    x_mean = X.mean(axis=0) if fit_intercept else np.zeros(p)
    y_mean = float(y.mean()) if fit_intercept else 0.0
    Z = X - x_mean
    yc = y - y_mean
    scale = np.ones(p)
    if standardize:
        scale = np.sqrt(np.mean(Z ** 2, axis=0))
        scale[scale == 0.0] = 1.0
        Z = Z / scale

    col_sq = np.sum(Z ** 2, axis=0) / n
    beta = np.zeros(p)
    resid = yc.copy()
    converged = False
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_delta = 0.0
        for j in range(p):
            if col_sq[j] == 0.0:
                continue
            old = beta[j]
            rho = Z[:, j] @ resid / n + col_sq[j] * old
            new = soft_threshold(rho, lam) / col_sq[j]
            if new != old:
                resid -= Z[:, j] * (new - old)
                beta[j] = new
                max_delta = max(max_delta, abs(new - old))
        if max_delta < tol:
            converged = True
            break
    if not converged:
        logger.warning("lasso did not converge after %d sweeps (lambda=%.4g)", max_sweeps, lam)

    coef = beta / scale
    intercept = y_mean - float(x_mean @ coef)
    extra = {"lambda": lam, "sweeps": sweeps, "standardize": standardize, "fit_intercept": fit_intercept}
    return FittedLinear(coef, intercept, "lasso", converged, extra)


def select_lasso_lambda(
    X_train, y_train, X_valid, y_valid, grid: Sequence[float], **lasso_kwargs
) -> FittedLinear:
    """Refit on the training part for each lambda and keep the best validation MSE."""
    if not grid:
        raise ConfigError("lasso lambda grid is empty")
    X_valid, y_valid = _check_xy(X_valid, y_valid)
    best_score, best = math.inf, None
    for lam in grid:
        model = fit_lasso(X_train, y_train, float(lam), **lasso_kwargs)
        score = float(np.mean((model.predict(X_valid) - y_valid) ** 2))
        if best is None or score < best_score:
            best_score, best = score, model
    best.extra["lambda_grid"] = [float(v) for v in grid]
    best.extra["valid_mse"] = best_score
    return best


# ---------------------------------------------------------------------------
# Principal component regression and farm-lite
# ---------------------------------------------------------------------------


def _principal_components(X: np.ndarray, k: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Centre X and return (x_mean, centred X, top-k loadings V_k (p, k), singular values)."""
    n, p = X.shape
    if k < 0 or k > min(n, p):
        raise ConfigError(f"number of components must lie in [0, min(n, p)={min(n, p)}], got {k}")
    x_mean = X.mean(axis=0)
    Xc = X - x_mean
    if k == 0:
        return x_mean, Xc, np.zeros((p, 0)), np.zeros(0)
    _, s, Vt = linalg.svd(Xc, full_matrices=False)
    return x_mean, Xc, Vt[:k].T, s[:k]


def _score_regression(Xc: np.ndarray, yc: np.ndarray, V: np.ndarray, s: np.ndarray) -> np.ndarray:
    """OLS of yc on the scores Xc V; directions with zero variance get coefficient 0."""
    if V.shape[1] == 0:
        return np.zeros(0)
    scores = Xc @ V
    keep = s > 1e-12 * max(1.0, float(s[0]))
    gamma = np.zeros(V.shape[1])
    if np.any(keep):
        gamma[keep], *_ = linalg.lstsq(scores[:, keep], yc)
    return gamma


def fit_pcr(X, y, k: int) -> FittedLinear:
    X, y = _check_xy(X, y)
    x_mean, Xc, V, s = _principal_components(X, k)
    y_mean = float(y.mean())
    gamma = _score_regression(Xc, y - y_mean, V, s)
    coef = V @ gamma
    return FittedLinear(coef, y_mean - float(x_mean @ coef), "pcr", True, {"k": k})


def fit_farm_lite(X, y, k: int, lam: float, standardize: bool = True) -> FittedLinear:
    """PCR on the top-k factors, then Lasso on the factor-residualized covariates."""
    X, y = _check_xy(X, y)
    x_mean, Xc, V, s = _principal_components(X, k)
    y_mean = float(y.mean())
    yc = y - y_mean
    gamma = _score_regression(Xc, yc, V, s)
    p = X.shape[1]
    residualizer = np.eye(p) - V @ V.T
    U = Xc @ residualizer
    sparse = fit_lasso(U, yc - Xc @ V @ gamma, lam, standardize=standardize, fit_intercept=False)
    coef = V @ gamma + residualizer @ sparse.coef
    extra = {"k": k, "lambda": lam, "n_active": int(np.count_nonzero(sparse.coef))}
    return FittedLinear(coef, y_mean - float(x_mean @ coef), "farm-lite", sparse.converged, extra)
