from fastnn.estimators.fanam import FanamModel, fit_fanam
from fastnn.estimators.fast_nn import FastNnModel, fit_fast_nn, select_penalty_lambda, selection_scores
from fastnn.estimators.linear import (
    FittedLinear,
    fit_farm_lite,
    fit_lasso,
    fit_min_l2,
    fit_pcr,
    select_lasso_lambda,
)
from fastnn.estimators.neural import ArchConfig, NetRegressor, fit_baseline_nn, fit_far_nn
from fastnn.estimators.penalties import ClippedL1Config, clipped_l1, clipped_l1_subgrad
from fastnn.estimators.scaling import ScaledModel, Standardizer
from fastnn.estimators.serialize import model_from_dict, model_to_dict

__all__ = [
    "ArchConfig",
    "ClippedL1Config",
    "FanamModel",
    "FastNnModel",
    "FittedLinear",
    "NetRegressor",
    "ScaledModel",
    "Standardizer",
    "clipped_l1",
    "clipped_l1_subgrad",
    "fit_baseline_nn",
    "fit_fanam",
    "fit_far_nn",
    "fit_farm_lite",
    "fit_fast_nn",
    "fit_lasso",
    "fit_min_l2",
    "fit_pcr",
    "model_from_dict",
    "model_to_dict",
    "select_lasso_lambda",
    "select_penalty_lambda",
    "selection_scores",
]
