"""Self-describing JSON for every fitted model, dispatched on the "kind" field."""

from __future__ import annotations

from typing import Union

from fastnn.errors import ConfigError
from fastnn.estimators.fanam import FanamModel
from fastnn.estimators.fast_nn import FastNnModel
from fastnn.estimators.linear import LINEAR_METHODS, FittedLinear
from fastnn.estimators.neural import BASELINE_KINDS, NetRegressor
from fastnn.estimators.scaling import ScaledModel, Standardizer

SCHEMA_VERSION = 1
STANDARDIZED = "standardized"

FittedModel = Union[NetRegressor, FastNnModel, FanamModel, FittedLinear, ScaledModel]


def model_to_dict(model: FittedModel) -> dict:
    if isinstance(model, ScaledModel):
        data = {"kind": STANDARDIZED, "scaler": model.scaler.to_dict(), "model": model_to_dict(model.model)}
    else:
        data = model.to_dict()
    data["schema_version"] = SCHEMA_VERSION
    return data


def model_from_dict(data: dict) -> FittedModel:
    version = data.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise ConfigError(f"unsupported model schema_version {version}")
    kind = data.get("kind")
    if kind == STANDARDIZED:
        return ScaledModel(model_from_dict(data["model"]), Standardizer.from_dict(data["scaler"]))
    if kind == "fast-nn":
        return FastNnModel.from_dict(data)
    if kind == "fanam":
        return FanamModel.from_dict(data)
    if kind in LINEAR_METHODS:
        return FittedLinear.from_dict(data)
    if kind == "far-nn" or kind in BASELINE_KINDS:
        return NetRegressor.from_dict(data)
    raise ConfigError(f"unknown model kind {kind!r}")
