"""
FANAM: g_0(f~) + sum_j beta_j g_j(x_j - v_j^T f~) with an l1 penalty on beta.

The p univariate subnets g_j are evaluated together as one StackedReLUNets.
W stays fixed; V, beta and every subnet are trained.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

import numpy as np
from scipy import linalg

from fastnn.errors import ConfigError, ShapeError
from fastnn.estimators.neural import ArchConfig, _decode_float, _encode_float, _hyper, mse, net_from_dict, net_to_dict
from fastnn.estimators.penalties import l1_subgrad
from fastnn.estimators.training import TrainStreams, fit_parameters
from fastnn.factor.dgp import FactorSample
from fastnn.factor.projection import DiversifiedProjection, ProjectionLike, surrogate_factor
from fastnn.nets.optim import TrainConfig, apply_input_dropout
from fastnn.nets.relu_net import (
    DenseReLUNet,
    StackedReLUNets,
    backprop,
    forward,
    forward_with_cache,
    init_stacked,
    stacked_backprop,
    stacked_forward_with_cache,
)

logger = logging.getLogger(__name__)


@dataclass
class FanamModel:
    projection: DiversifiedProjection
    V: np.ndarray
    g0: DenseReLUNet
    subnets: StackedReLUNets
    beta: np.ndarray
    lam: float = 0.0
    hyper: Dict[str, Any] = field(default_factory=dict)

    kind = "fanam"
    inputs = "x"

    def __post_init__(self) -> None:
        p, r_bar = self.projection.p, self.projection.r_bar
        if self.V.shape != (p, r_bar):
            raise ShapeError(f"V must be {p} x {r_bar}, got {self.V.shape}")
        if self.beta.shape != (p,):
            raise ShapeError(f"beta must have {p} entries, got {self.beta.shape}")
        if self.subnets.count != p or self.subnets.input_dim != 1:
            raise ShapeError("FANAM needs one univariate subnet per covariate")
        if self.g0.input_dim != r_bar:
            raise ShapeError(f"g0 must read the {r_bar} factor coordinates")

    def components(self, x) -> tuple:
        """(g0(f~), per-covariate subnet outputs g_j(x_j - v_j^T f~)) before beta weighting."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        F = surrogate_factor(self.projection, x)
        R = x - F @ self.V.T
        G, _ = stacked_forward_with_cache(self.subnets, R[:, :, None])
        return forward(self.g0, F)[:, 0], G[:, :, 0]

    def predict(self, x) -> np.ndarray:
        base, G = self.components(x)
        return base + G @ self.beta

    def features(self, batch: FactorSample) -> np.ndarray:
        return batch.x

    def predict_batch(self, batch: FactorSample) -> np.ndarray:
        return self.predict(batch.x)

    def penalty_value(self) -> float:
        return float(self.lam * np.sum(np.abs(self.beta)))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "projection": self.projection.to_dict(),
            "V": self.V.tolist(),
            "g0": net_to_dict(self.g0),
            "subnets": {
                "truncation": _encode_float(self.subnets.truncation),
                "weights": [W.tolist() for W in self.subnets.weights],
                "biases": [b.tolist() for b in self.subnets.biases],
            },
            "beta": self.beta.tolist(),
            "lam": self.lam,
            "hyper": self.hyper,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FanamModel":
        sub = data["subnets"]
        return cls(
            projection=DiversifiedProjection.from_dict(data["projection"]),
            V=np.asarray(data["V"], dtype=float),
            g0=net_from_dict(data["g0"]),
            subnets=StackedReLUNets(
                [np.asarray(W, dtype=float) for W in sub["weights"]],
                [np.asarray(b, dtype=float) for b in sub["biases"]],
                truncation=_decode_float(sub.get("truncation")),
            ),
            beta=np.asarray(data["beta"], dtype=float),
            lam=float(data.get("lam", 0.0)),
            hyper=dict(data.get("hyper", {})),
        )


def residualizer_ols(X: np.ndarray, F: np.ndarray) -> np.ndarray:
    """Least-squares V with X ~ F V^T, one column regression per covariate."""
    coef, *_ = linalg.lstsq(F, X)
    return coef.T


def fit_fanam(
    train: FactorSample,
    valid: FactorSample,
    W: ProjectionLike,
    arch: ArchConfig,
    lam: float,
    config: TrainConfig,
    sub_arch: Optional[ArchConfig] = None,
    freeze_beta: bool = False,
) -> FanamModel:
    """Train all subnets, V and beta on squared error + lam * ||beta||_1.

    beta starts at 0 and V at the least-squares residualizer. With freeze_beta
    the model stays a pure factor regression g0(f~).
    """
    if lam < 0:
        raise ConfigError(f"lambda must be nonnegative, got {lam}")
    if len(train) == 0 or len(valid) == 0:
        raise ShapeError("training and validation sets must be nonempty")
    projection = W if isinstance(W, DiversifiedProjection) else DiversifiedProjection(np.asarray(W, dtype=float))
    p, r_bar = projection.p, projection.r_bar
    if train.p != p:
        raise ShapeError(f"projection has {p} rows but the data has {train.p} covariates")
    sub_arch = sub_arch or arch
    streams = TrainStreams.from_seed(config.seed)
    g0_template = arch.init(r_bar, streams.init)
    sub_template = init_stacked(p, sub_arch.widths(1), streams.init, truncation=sub_arch.truncation)
    n_g0 = len(g0_template.parameters())

    X, y = train.x, train.y
    V0 = residualizer_ols(X, surrogate_factor(projection, X))
    beta0 = np.zeros(p)
    rate = config.input_dropout_rate

    def unpack(params):
        return params[0], params[1], g0_template.with_parameters(params[2:2 + n_g0]), \
            sub_template.with_parameters(params[2 + n_g0:])

    def objective(params, idx, rng):
        V, beta, g0, subnets = unpack(params)
        Xb = apply_input_dropout(X[idx], rate, rng)
        F = surrogate_factor(projection, Xb)
        R = Xb - F @ V.T
        base, cache0 = forward_with_cache(g0, F)
        G, cache_s = stacked_forward_with_cache(subnets, R[:, :, None])
        resid = base[:, 0] + G[:, :, 0] @ beta - y[idx]
        g_out = 2.0 * resid / resid.size
        grads0, _ = backprop(g0, cache0, g_out[:, None])
        grads_s, g_R = stacked_backprop(subnets, cache_s, (g_out[:, None] * beta[None, :])[:, :, None])
        g_V = -(g_R[:, :, 0].T @ F)
        g_beta = G[:, :, 0].T @ g_out + lam * l1_subgrad(beta)
        loss = float(np.mean(resid ** 2)) + lam * float(np.sum(np.abs(beta)))
        return loss, [g_V, g_beta] + grads0 + grads_s

    def criterion(params):
        V, beta, g0, subnets = unpack(params)
        model = FanamModel(projection, V, g0, subnets, beta, lam)
        return mse(model.predict(valid.x), valid.y) + model.penalty_value()

    result = fit_parameters(
        [V0, beta0] + g0_template.parameters() + sub_template.parameters(),
        objective, criterion, len(train), config, streams,
        clamp_bound=arch.weight_bound,
        frozen=[1] if freeze_beta else None,
    )
    V, beta, g0, subnets = unpack(result.params)
    hyper = _hyper(
        arch, config, result, r_bar=r_bar, lam=lam, freeze_beta=freeze_beta,
        sub_arch={k: _encode_float(v) for k, v in sub_arch.to_dict().items()},
    )
    model = FanamModel(projection, V, g0, subnets, beta, lam, hyper)
    logger.debug("fanam: ||beta||_1 %.4g, best epoch %d", float(np.sum(np.abs(beta))), result.best_epoch)
    return model
