"""
FAR-NN and the neural baselines (oracle, oracle-factor, vanilla, NN-Joint, dropout variants).

All of them are a truncated ReLU trunk fed one of: the factor surrogate
p^-1 W^T x, the raw covariates x, or the latent truth (f, u_J).
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from fastnn.errors import ConfigError, ShapeError
from fastnn.factor.dgp import FactorSample
from fastnn.factor.projection import DiversifiedProjection, ProjectionLike, surrogate_factor
from fastnn.nets.optim import TrainConfig, apply_input_dropout
from fastnn.nets.relu_net import DenseReLUNet, backprop, forward, forward_with_cache, init_net
from fastnn.estimators.training import TrainResult, TrainStreams, fit_parameters

logger = logging.getLogger(__name__)

DROPOUT_GRID: Tuple[float, ...] = (0.0, 0.3, 0.5, 0.6, 0.7, 0.8, 0.9)
BASELINE_KINDS = ("oracle", "oracle-factor", "vanilla", "nn-joint", "dropout-vanilla", "dropout-joint")


@dataclass
class ArchConfig:
    depth: int = 4
    width: int = 64
    truncation: float = 100.0
    weight_bound: float = math.inf

    def __post_init__(self) -> None:
        if self.depth < 1 or self.width < 1:
            raise ConfigError(f"architecture needs depth >= 1 and width >= 1, got {self.depth}, {self.width}")
        if self.truncation <= 0 or self.weight_bound <= 0:
            raise ConfigError("truncation and weight_bound must be positive")

    def widths(self, input_dim: int, output_dim: int = 1) -> List[int]:
        return [input_dim] + [self.width] * self.depth + [output_dim]

    def init(self, input_dim: int, rng: np.random.Generator, output_dim: int = 1) -> DenseReLUNet:
        return init_net(
            self.widths(input_dim, output_dim), rng, truncation=self.truncation, weight_bound=self.weight_bound
        )

    def to_dict(self) -> dict:
        return asdict(self)


def model_inputs(batch: FactorSample, inputs: str, important: Sequence[int] = ()) -> np.ndarray:
    """Feature matrix a model reads from a batch: 'x', 'f' or 'f+uJ'."""
    if inputs == "x":
        return batch.x
    if batch.f is None:
        raise ConfigError(f"model reads latent '{inputs}' but the dataset carries no latent truth")
    if inputs == "f":
        return batch.f
    if inputs == "f+uJ":
        if batch.u is None:
            raise ConfigError("model reads idiosyncratic coordinates but the dataset has none")
        return np.hstack([batch.f, batch.u[:, list(important)]])
    raise ConfigError(f"unknown model input kind {inputs!r}")


@dataclass
class NetRegressor:
    kind: str
    net: DenseReLUNet
    inputs: str = "x"
    projection: Optional[np.ndarray] = None
    important: Tuple[int, ...] = ()
    hyper: Dict[str, Any] = field(default_factory=dict)

    def transform(self, z: np.ndarray) -> np.ndarray:
        if self.projection is None:
            return z
        return surrogate_factor(self.projection, z)

    def predict(self, z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return forward(self.net, self.transform(z))[:, 0]

    def features(self, batch: FactorSample) -> np.ndarray:
        return model_inputs(batch, self.inputs, self.important)

    def predict_batch(self, batch: FactorSample) -> np.ndarray:
        return self.predict(self.features(batch))

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "inputs": self.inputs,
            "important": list(self.important),
            "projection": None if self.projection is None else self.projection.tolist(),
            "net": net_to_dict(self.net),
            "hyper": self.hyper,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetRegressor":
        proj = data.get("projection")
        return cls(
            kind=data["kind"],
            net=net_from_dict(data["net"]),
            inputs=data.get("inputs", "x"),
            projection=None if proj is None else np.asarray(proj, dtype=float),
            important=tuple(data.get("important", ())),
            hyper=dict(data.get("hyper", {})),
        )


def _encode_float(value: float):
    return "inf" if math.isinf(value) else value


def _decode_float(value) -> float:
    return math.inf if value in ("inf", None) else float(value)


def net_to_dict(net: DenseReLUNet) -> dict:
    return {
        "widths": net.widths,
        "truncation": _encode_float(net.truncation),
        "weight_bound": _encode_float(net.weight_bound),
        "weights": [W.tolist() for W in net.weights],
        "biases": [b.tolist() for b in net.biases],
    }


def net_from_dict(data: dict) -> DenseReLUNet:
    net = DenseReLUNet(
        weights=[np.asarray(W, dtype=float).reshape(len(W), -1) for W in data["weights"]],
        biases=[np.asarray(b, dtype=float) for b in data["biases"]],
        truncation=_decode_float(data.get("truncation")),
        weight_bound=_decode_float(data.get("weight_bound")),
    )
    if net.widths != list(data.get("widths", net.widths)):
        raise ShapeError(f"stored widths {data['widths']} do not match weights {net.widths}")
    return net


def mse(pred: np.ndarray, y: np.ndarray) -> float:
    return float(np.mean((np.asarray(pred) - np.asarray(y)) ** 2))


def _check_sets(train: FactorSample, valid: FactorSample) -> None:
    if len(train) == 0 or len(valid) == 0:
        raise ShapeError("training and validation sets must be nonempty")


# ---------------------------------------------------------------------------
# Trunk trained on fixed features
# ---------------------------------------------------------------------------


def train_trunk(
    Z: np.ndarray,
    y: np.ndarray,
    Z_valid: np.ndarray,
    y_valid: np.ndarray,
    arch: ArchConfig,
    config: TrainConfig,
) -> Tuple[DenseReLUNet, TrainResult]:
    streams = TrainStreams.from_seed(config.seed)
    template = arch.init(Z.shape[1], streams.init)
    rate = config.input_dropout_rate

    def objective(params, idx, rng):
        net = template.with_parameters(params)
        Zb = apply_input_dropout(Z[idx], rate, rng)
        pred, cache = forward_with_cache(net, Zb)
        resid = pred[:, 0] - y[idx]
        grads, _ = backprop(net, cache, (2.0 * resid / resid.size)[:, None])
        return float(np.mean(resid ** 2)), grads

    def criterion(params):
        return mse(forward(template.with_parameters(params), Z_valid)[:, 0], y_valid)

    result = fit_parameters(
        template.parameters(), objective, criterion, Z.shape[0], config, streams, clamp_bound=arch.weight_bound
    )
    return template.with_parameters(result.params), result


def _hyper(arch: ArchConfig, config: TrainConfig, result: TrainResult, **extra) -> Dict[str, Any]:
    out = {"arch": {k: _encode_float(v) for k, v in arch.to_dict().items()}, "train": config.to_dict()}
    out.update(best_epoch=result.best_epoch, best_valid=result.best_valid)
    out.update(extra)
    return out


def fit_far_nn(
    train: FactorSample, valid: FactorSample, W: ProjectionLike, arch: ArchConfig, config: TrainConfig
) -> NetRegressor:
    """Trunk regression on the factor surrogate p^-1 W^T x; W must not depend on the labels."""
    _check_sets(train, valid)
    W_mat = W.W if isinstance(W, DiversifiedProjection) else np.asarray(W, dtype=float)
    net, result = train_trunk(
        surrogate_factor(W_mat, train.x), train.y, surrogate_factor(W_mat, valid.x), valid.y, arch, config
    )
    return NetRegressor("far-nn", net, "x", W_mat.copy(), (), _hyper(arch, config, result, r_bar=W_mat.shape[1]))


# ---------------------------------------------------------------------------
# NN-Joint: projection as a trainable first layer
# ---------------------------------------------------------------------------


def _fit_joint(
    train: FactorSample, valid: FactorSample, W0: np.ndarray, arch: ArchConfig, config: TrainConfig, kind: str
) -> Tuple[NetRegressor, TrainResult]:
    streams = TrainStreams.from_seed(config.seed)
    p = W0.shape[0]
    template = arch.init(W0.shape[1], streams.init)
    rate = config.input_dropout_rate
    X, y = train.x, train.y

    def objective(params, idx, rng):
        W, net = params[0], template.with_parameters(params[1:])
        Xb = apply_input_dropout(X[idx], rate, rng)
        pred, cache = forward_with_cache(net, Xb @ W / p)
        resid = pred[:, 0] - y[idx]
        grads, g_in = backprop(net, cache, (2.0 * resid / resid.size)[:, None])
        return float(np.mean(resid ** 2)), [Xb.T @ g_in / p] + grads

    def criterion(params):
        net = template.with_parameters(params[1:])
        return mse(forward(net, valid.x @ params[0] / p)[:, 0], valid.y)

    result = fit_parameters(
        [W0] + template.parameters(), objective, criterion, len(train), config, streams,
        clamp_bound=arch.weight_bound,
    )
    model = NetRegressor(
        kind, template.with_parameters(result.params[1:]), "x", result.params[0],
        hyper=_hyper(arch, config, result, r_bar=W0.shape[1]),
    )
    return model, result


# ---------------------------------------------------------------------------
# Baseline roster
# ---------------------------------------------------------------------------


def _fit_plain(
    kind: str, train: FactorSample, valid: FactorSample, inputs: str, important: Sequence[int],
    arch: ArchConfig, config: TrainConfig,
) -> Tuple[NetRegressor, TrainResult]:
    Z = model_inputs(train, inputs, important)
    Zv = model_inputs(valid, inputs, important)
    net, result = train_trunk(Z, train.y, Zv, valid.y, arch, config)
    return NetRegressor(kind, net, inputs, None, tuple(important), _hyper(arch, config, result)), result


def fit_baseline_nn(
    kind: str,
    train: FactorSample,
    valid: FactorSample,
    arch: ArchConfig,
    config: TrainConfig,
    W: Optional[ProjectionLike] = None,
    important: Sequence[int] = (),
    dropout_grid: Sequence[float] = DROPOUT_GRID,
) -> NetRegressor:
    if kind not in BASELINE_KINDS:
        raise ConfigError(f"unknown baseline {kind!r}; expected one of {BASELINE_KINDS}")
    _check_sets(train, valid)
    if kind in ("oracle", "oracle-factor"):
        if not (train.has_truth and valid.has_truth):
            raise ConfigError(f"{kind} needs latent factors in the training and validation data")
        inputs = "f+uJ" if kind == "oracle" and important else "f"
        return _fit_plain(kind, train, valid, inputs, important if inputs == "f+uJ" else (), arch, config)[0]
    if kind == "vanilla":
        return _fit_plain(kind, train, valid, "x", (), arch, config)[0]

    W0 = None
    if kind in ("nn-joint", "dropout-joint"):
        if W is None:
            raise ConfigError(f"{kind} needs an initial projection matrix")
        W0 = W.W if isinstance(W, DiversifiedProjection) else np.asarray(W, dtype=float)
    if kind == "nn-joint":
        return _fit_joint(train, valid, W0, arch, config, kind)[0]

    if not dropout_grid:
        raise ConfigError("dropout grid is empty")
    best_valid, best_model = math.inf, None
    for rate in dropout_grid:
        trial_config = replace(config, input_dropout_rate=float(rate))
        if kind == "dropout-joint":
            model, result = _fit_joint(train, valid, W0, arch, trial_config, kind)
        else:
            model, result = _fit_plain(kind, train, valid, "x", (), arch, trial_config)
        logger.debug("%s rate %.2f: valid %.5g", kind, rate, result.best_valid)
        if best_model is None or result.best_valid < best_valid:
            best_valid, best_model = result.best_valid, model
    best_model.hyper["dropout_rate"] = best_model.hyper["train"]["input_dropout_rate"]
    return best_model
