"""
Column standardization fitted on training rows, and a model wrapper that applies
it on the way in and undoes the response scaling on the way out.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from fastnn.errors import ShapeError
from fastnn.factor.dgp import FactorSample


@dataclass
class Standardizer:
    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float = 0.0
    y_scale: float = 1.0

    @classmethod
    def fit(cls, X: np.ndarray, y: Optional[np.ndarray] = None, standardize_x: bool = True,
            scale_response: bool = False) -> "Standardizer":
        X = np.asarray(X, dtype=float)
        p = X.shape[1]
        x_mean, x_scale = np.zeros(p), np.ones(p)
        if standardize_x:
            x_mean = X.mean(axis=0)
            x_scale = X.std(axis=0)
            x_scale[x_scale == 0.0] = 1.0
        y_mean, y_scale = 0.0, 1.0
        if scale_response and y is not None:
            y = np.asarray(y, dtype=float)
            y_mean = float(y.mean())
            y_scale = float(y.std()) or 1.0
        return cls(x_mean, x_scale, y_mean, y_scale)

    @property
    def p(self) -> int:
        return self.x_mean.shape[0]

    def transform_x(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.p:
            raise ShapeError(f"expected {self.p} covariates, got {X.shape[-1]}")
        return (X - self.x_mean) / self.x_scale

    def transform_y(self, y) -> np.ndarray:
        return (np.asarray(y, dtype=float) - self.y_mean) / self.y_scale

    def inverse_y(self, y) -> np.ndarray:
        return np.asarray(y, dtype=float) * self.y_scale + self.y_mean

    def transform(self, sample: FactorSample) -> FactorSample:
        return FactorSample(x=self.transform_x(sample.x), y=self.transform_y(sample.y))

    def to_dict(self) -> dict:
        return {
            "x_mean": self.x_mean.tolist(),
            "x_scale": self.x_scale.tolist(),
            "y_mean": self.y_mean,
            "y_scale": self.y_scale,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Standardizer":
        return cls(
            np.asarray(data["x_mean"], dtype=float),
            np.asarray(data["x_scale"], dtype=float),
            float(data.get("y_mean", 0.0)),
            float(data.get("y_scale", 1.0)),
        )


@dataclass
class ScaledModel:
    """A model trained on standardized data, predicting on the original scale."""

    model: object
    scaler: Standardizer

    inputs = "x"

    @property
    def kind(self) -> str:
        return self.model.kind

    def predict(self, x) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.scaler.inverse_y(self.model.predict(self.scaler.transform_x(x)))

    def features(self, batch: FactorSample) -> np.ndarray:
        return batch.x

    def predict_batch(self, batch: FactorSample) -> np.ndarray:
        return self.predict(batch.x)
