from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import List

from fastnn.errors import ConfigError, ShapeError
from fastnn.estimators.serialize import FittedModel, model_from_dict, model_to_dict

from . import io_utils

MODEL_FORMAT = "fastnn-model"


@dataclass
class StoredModel:
    model: FittedModel
    covariates: List[str]
    response: str
    y_bar_train: float

    def check_columns(self, covariates: List[str]) -> None:
        if len(covariates) != len(self.covariates):
            raise ShapeError(
                f"model was trained on {len(self.covariates)} covariates, data has {len(covariates)}"
            )
        if list(covariates) != list(self.covariates):
            raise ShapeError("data covariate columns differ from the model's")


def save_model(path: Path, stored: StoredModel) -> None:
    io_utils.write_json(
        Path(path),
        {
            "format": MODEL_FORMAT,
            "covariates": stored.covariates,
            "response": stored.response,
            "y_bar_train": stored.y_bar_train,
            "model": io_utils.json_safe(model_to_dict(stored.model)),
        },
    )


def load_model(path: Path) -> StoredModel:
    try:
        data = io_utils.load_json(Path(path))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: model file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict) or data.get("format") != MODEL_FORMAT:
        raise ConfigError(f"{path} is not a model file")
    return StoredModel(
        model=model_from_dict(data["model"]),
        covariates=list(data["covariates"]),
        response=data["response"],
        y_bar_train=float(data["y_bar_train"]),
    )
