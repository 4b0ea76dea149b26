"""
Diversified projection matrices and the factor surrogate p^-1 W^T x.

The PCA construction takes the top r_bar eigenvectors of the uncentred sample
second-moment matrix of unlabeled covariates, scaled to norm sqrt(p). With
n1 << p the eigenvectors come from the n1 x n1 Gram matrix X X^T / n1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional, Tuple, Union

import numpy as np
from scipy import linalg

from fastnn.errors import ConfigError, NumericError, ShapeError

logger = logging.getLogger(__name__)


@dataclass
class DiversifiedProjection:
    W: np.ndarray
    eigenvalues: Optional[np.ndarray] = field(default=None)

    def __post_init__(self) -> None:
        self.W = np.asarray(self.W, dtype=float)
        if self.W.ndim != 2:
            raise ShapeError(f"projection matrix must be 2-D, got shape {self.W.shape}")

    @property
    def p(self) -> int:
        return self.W.shape[0]

    @property
    def r_bar(self) -> int:
        return self.W.shape[1]

    def surrogate(self, x) -> np.ndarray:
        return surrogate_factor(self, x)

    def to_dict(self) -> dict:
        return {
            "W": self.W.tolist(),
            "eigenvalues": None if self.eigenvalues is None else self.eigenvalues.tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "DiversifiedProjection":
        eig = data.get("eigenvalues")
        return cls(W=np.asarray(data["W"], dtype=float), eigenvalues=None if eig is None else np.asarray(eig))


ProjectionLike = Union[DiversifiedProjection, np.ndarray]


def _matrix(W: ProjectionLike) -> np.ndarray:
    return W.W if isinstance(W, DiversifiedProjection) else np.asarray(W, dtype=float)


def fix_signs(V: np.ndarray) -> np.ndarray:
    """Flip columns so each column's largest-magnitude entry is positive."""
    lead = np.argmax(np.abs(V), axis=0)
    signs = np.sign(V[lead, np.arange(V.shape[1])])
    signs[signs == 0] = 1.0
    return V * signs


def estimate_dpm_pca(X_unlabeled: np.ndarray, r_bar: int) -> DiversifiedProjection:
    X = np.asarray(X_unlabeled, dtype=float)
    if X.ndim != 2:
        raise ShapeError(f"unlabeled covariates must be an (n1, p) matrix, got shape {X.shape}")
    n1, p = X.shape
    if r_bar < 1 or r_bar > n1:
        raise ConfigError(f"r_bar must lie in [1, n1={n1}], got {r_bar}")

    gram = X @ X.T / n1
    values, vectors = linalg.eigh(gram, subset_by_index=[n1 - r_bar, n1 - 1])
    order = np.argsort(values)[::-1]
    values, vectors = values[order], vectors[:, order]

    V = X.T @ vectors
    norms = np.linalg.norm(V, axis=0)
    if np.any(norms <= 1e-12 * max(1.0, float(np.linalg.norm(X)))):
        raise NumericError(f"unlabeled covariates have rank below r_bar={r_bar}")
    V = fix_signs(V / norms)
    logger.debug("PCA projection: n1=%d p=%d r_bar=%d top eigenvalue %.4g", n1, p, r_bar, values[0])
    return DiversifiedProjection(W=np.sqrt(p) * V, eigenvalues=np.clip(values, 0.0, None))


def random_projection(p: int, r_bar: int, rng: np.random.Generator) -> DiversifiedProjection:
    """Gaussian control matrix; generally fails the significance condition."""
    return DiversifiedProjection(W=rng.standard_normal((p, r_bar)))


def surrogate_factor(W: ProjectionLike, x) -> np.ndarray:
    """p^-1 W^T x for a single vector or each row of a batch."""
    M = _matrix(W)
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != M.shape[0]:
        raise ShapeError(f"projection expects {M.shape[0]} covariates, got {x.shape[-1]}")
    return x @ M / M.shape[0]


def projection_diagnostics(W: ProjectionLike, B: np.ndarray) -> Tuple[float, float]:
    """Smallest and largest singular values of H = p^-1 W^T B."""
    M = _matrix(W)
    B = np.asarray(B, dtype=float)
    if M.shape[0] != B.shape[0]:
        raise ShapeError(f"W has {M.shape[0]} rows but B has {B.shape[0]}")
    H = M.T @ B / M.shape[0]
    sq = np.clip(np.linalg.eigvalsh(H.T @ H), 0.0, None)
    singular = np.sqrt(sq)
    return float(singular.min()), float(singular.max())
