from __future__ import annotations

import numpy as np

from fastnn.errors import ConfigError, NumericError, ShapeError
from fastnn.factor.dgp import FactorSample


def eval_mse(model, test: FactorSample) -> float:
    """Mean squared distance between predictions and the noiseless regression m*."""
    if len(test) == 0:
        raise ShapeError("test set is empty")
    if test.m_star is None:
        raise ConfigError("test set carries no latent regression values")
    pred = model.predict_batch(test)
    return float(np.mean((pred - test.m_star) ** 2))


def r2_oos(pred, y, y_bar_train: float) -> float:
    """1 - sum (pred - y)^2 / sum (y_bar_train - y)^2; may be negative."""
    pred = np.asarray(pred, dtype=float)
    y = np.asarray(y, dtype=float)
    if pred.shape != y.shape or y.size == 0:
        raise ShapeError(f"predictions {pred.shape} and targets {y.shape} must match and be nonempty")
    denom = float(np.sum((y_bar_train - y) ** 2))
    sse = float(np.sum((pred - y) ** 2))
    if denom <= 0.0:
        # targets equal the training mean: a model matching them has no skill over it
        if sse <= 1e-12 * y.size * max(1.0, y_bar_train ** 2):
            return 0.0
        raise NumericError("test targets all equal the training mean; out-of-sample R^2 is undefined")
    return 1.0 - sse / denom


def eval_r2_oos(model, test: FactorSample, y_bar_train: float) -> float:
    return r2_oos(model.predict_batch(test), test.y, y_bar_train)
