from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from fastnn.errors import ConfigError


@dataclass(frozen=True)
class ClippedL1Config:
    lam: float = 1e-2
    tau: float = 1e-2

    def __post_init__(self) -> None:
        if self.tau <= 0:
            raise ConfigError(f"tau must be positive, got {self.tau}")
        if self.lam < 0:
            raise ConfigError(f"lambda must be nonnegative, got {self.lam}")

    @classmethod
    def theory(cls, n: int, p: int, c: float = 1.0) -> "ClippedL1Config":
        """lambda = log(pn)/n and tau = 1/(n^c p)."""
        return cls(lam=math.log(p * n) / n, tau=1.0 / (n ** c * p))

    def to_dict(self) -> dict:
        return asdict(self)


def clipped_l1(x, tau: float):
    """min(|x| / tau, 1), entrywise."""
    if tau <= 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    return np.minimum(np.abs(x) / tau, 1.0)


def clipped_l1_subgrad(x, tau: float):
    """sign(x)/tau strictly inside (0, tau) in magnitude, 0 on the plateau and at 0."""
    if tau <= 0:
        raise ConfigError(f"tau must be positive, got {tau}")
    x = np.asarray(x, dtype=float)
    inside = (np.abs(x) < tau) & (x != 0.0)
    return np.where(inside, np.sign(x) / tau, 0.0)


def clipped_l1_penalty(theta: np.ndarray, penalty: ClippedL1Config) -> float:
    return float(penalty.lam * np.sum(clipped_l1(theta, penalty.tau)))


def l1_subgrad(x) -> np.ndarray:
    """sign(x) with 0 at 0."""
    return np.sign(np.asarray(x, dtype=float))
