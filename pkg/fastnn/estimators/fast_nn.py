"""
FAST-NN: a trunk fed [p^-1 W^T x, T_M(Theta^T x)], trained on squared error plus
lambda * sum psi_tau(Theta_ij). Theta is p x N_sel and screens raw covariates.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Dict, Sequence

import numpy as np

from fastnn.errors import ConfigError, ShapeError
from fastnn.estimators.neural import ArchConfig, _hyper, mse, net_from_dict, net_to_dict
from fastnn.estimators.penalties import ClippedL1Config, clipped_l1_penalty, clipped_l1_subgrad
from fastnn.estimators.training import TrainStreams, fit_parameters
from fastnn.factor.dgp import FactorSample
from fastnn.factor.projection import DiversifiedProjection, ProjectionLike, surrogate_factor
from fastnn.nets.optim import TrainConfig, apply_input_dropout
from fastnn.nets.relu_net import DenseReLUNet, backprop, forward, forward_with_cache, truncate

logger = logging.getLogger(__name__)

DEFAULT_N_SEL = 10


@dataclass
class FastNnModel:
    projection: DiversifiedProjection
    theta: np.ndarray
    trunk: DenseReLUNet
    penalty: ClippedL1Config = field(default_factory=ClippedL1Config)
    truncation: float = 100.0
    hyper: Dict[str, Any] = field(default_factory=dict)

    kind = "fast-nn"
    inputs = "x"

    def __post_init__(self) -> None:
        if self.theta.ndim != 2 or self.theta.shape[0] != self.projection.p or self.theta.shape[1] < 1:
            raise ShapeError(f"theta must be {self.projection.p} x N_sel with N_sel >= 1, got {self.theta.shape}")
        if self.trunk.input_dim != self.projection.r_bar + self.theta.shape[1]:
            raise ShapeError("trunk input must have r_bar + N_sel coordinates")

    @property
    def n_sel(self) -> int:
        return self.theta.shape[1]

    def trunk_input(self, x: np.ndarray) -> np.ndarray:
        return np.hstack([surrogate_factor(self.projection, x), truncate(x @ self.theta, self.truncation)])

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return forward(self.trunk, self.trunk_input(x))[:, 0]

    def features(self, batch: FactorSample) -> np.ndarray:
        return batch.x

    def predict_batch(self, batch: FactorSample) -> np.ndarray:
        return self.predict(batch.x)

    def penalty_value(self) -> float:
        return clipped_l1_penalty(self.theta, self.penalty)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "projection": self.projection.to_dict(),
            "theta": self.theta.tolist(),
            "trunk": net_to_dict(self.trunk),
            "penalty": self.penalty.to_dict(),
            "truncation": "inf" if math.isinf(self.truncation) else self.truncation,
            "hyper": self.hyper,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "FastNnModel":
        trunc = data.get("truncation", 100.0)
        return cls(
            projection=DiversifiedProjection.from_dict(data["projection"]),
            theta=np.asarray(data["theta"], dtype=float),
            trunk=net_from_dict(data["trunk"]),
            penalty=ClippedL1Config(**data.get("penalty", {})),
            truncation=math.inf if trunc == "inf" else float(trunc),
            hyper=dict(data.get("hyper", {})),
        )


def selection_scores(model: FastNnModel) -> np.ndarray:
    """Row-wise max |Theta|: one screening score per covariate."""
    return np.max(np.abs(model.theta), axis=1)


def fit_fast_nn(
    train: FactorSample,
    valid: FactorSample,
    W: ProjectionLike,
    arch: ArchConfig,
    penalty: ClippedL1Config,
    config: TrainConfig,
    n_sel: int = DEFAULT_N_SEL,
) -> FastNnModel:
    if n_sel < 1:
        raise ConfigError(f"N_sel must be >= 1, got {n_sel}")
    if len(train) == 0 or len(valid) == 0:
        raise ShapeError("training and validation sets must be nonempty")
    projection = W if isinstance(W, DiversifiedProjection) else DiversifiedProjection(np.asarray(W, dtype=float))
    p, r_bar = projection.p, projection.r_bar
    if train.p != p:
        raise ShapeError(f"projection has {p} rows but the data has {train.p} covariates")
    M = arch.truncation
    streams = TrainStreams.from_seed(config.seed)
    template = arch.init(r_bar + n_sel, streams.init)
    theta0 = streams.init.uniform(-0.5 * penalty.tau, 0.5 * penalty.tau, size=(p, n_sel))
    rate = config.input_dropout_rate
    X, y = train.x, train.y
    F_train = surrogate_factor(projection, X)

    def objective(params, idx, rng):
        theta, net = params[0], template.with_parameters(params[1:])
        Xb = apply_input_dropout(X[idx], rate, rng)
        Fb = F_train[idx] if rate == 0.0 else surrogate_factor(projection, Xb)
        S = Xb @ theta
        pred, cache = forward_with_cache(net, np.hstack([Fb, truncate(S, M)]))
        resid = pred[:, 0] - y[idx]
        grads, g_in = backprop(net, cache, (2.0 * resid / resid.size)[:, None])
        g_sel = g_in[:, r_bar:]
        if not math.isinf(M):
            g_sel = g_sel * (np.abs(S) < M)
        g_theta = Xb.T @ g_sel + penalty.lam * clipped_l1_subgrad(theta, penalty.tau)
        loss = float(np.mean(resid ** 2)) + clipped_l1_penalty(theta, penalty)
        return loss, [g_theta] + grads

    def criterion(params):
        model = FastNnModel(projection, params[0], template.with_parameters(params[1:]), penalty, M)
        return mse(model.predict(valid.x), valid.y) + model.penalty_value()

    result = fit_parameters(
        [theta0] + template.parameters(), objective, criterion, len(train), config, streams,
        clamp_bound=arch.weight_bound,
    )
    hyper = _hyper(arch, config, result, n_sel=n_sel, r_bar=r_bar, penalty=penalty.to_dict())
    model = FastNnModel(projection, result.params[0], template.with_parameters(result.params[1:]), penalty, M, hyper)
    logger.debug("fast-nn: penalty %.4g, best epoch %d", model.penalty_value(), result.best_epoch)
    return model


def select_penalty_lambda(
    train: FactorSample,
    valid: FactorSample,
    W: ProjectionLike,
    arch: ArchConfig,
    tau: float,
    lambdas: Sequence[float],
    config: TrainConfig,
    n_sel: int = DEFAULT_N_SEL,
) -> FastNnModel:
    """Fit one model per lambda and keep the smallest unpenalized validation MSE.

    The penalty only drives early stopping inside each fit.
    """
    if not lambdas:
        raise ConfigError("lambda grid is empty")
    best_score, best_model = math.inf, None
    scores = []
    for lam in lambdas:
        model = fit_fast_nn(train, valid, W, arch, ClippedL1Config(lam=float(lam), tau=tau), config, n_sel)
        score = mse(model.predict(valid.x), valid.y)
        scores.append(score)
        if best_model is None or score < best_score:
            best_score, best_model = score, model
    best_model.hyper["lambda_grid"] = [float(v) for v in lambdas]
    best_model.hyper["lambda_valid_mse"] = scores
    return best_model
