"""Selection-matrix heat data: log10 |Theta^T| for plotting outside this package."""

from __future__ import annotations

import numpy as np
import pandas as pd

from fastnn.errors import ConfigError
from fastnn.estimators.fast_nn import FastNnModel


def export_theta_heatdata(model: FastNnModel, top_cols: int = 40) -> pd.DataFrame:
    """Rows of Theta^T sorted by their largest magnitude over all covariates, first
    top_cols covariates kept. Zero entries have no logarithm and become NaN, which
    to_csv writes as empty cells."""
    if top_cols < 1:
        raise ConfigError(f"top_cols must be >= 1, got {top_cols}")
    theta_t = np.abs(model.theta.T)
    order = np.argsort(-theta_t.max(axis=1), kind="stable")
    block = theta_t[order, :top_cols]
    with np.errstate(divide="ignore"):
        logged = np.where(block > 0, np.log10(np.where(block > 0, block, 1.0)), np.nan)
    frame = pd.DataFrame(logged, columns=[f"x{j + 1}" for j in range(block.shape[1])])
    frame.insert(0, "column", order + 1)
    return frame
