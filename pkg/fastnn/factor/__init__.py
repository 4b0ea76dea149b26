from fastnn.factor.dgp import FactorDgp, FactorSample, Sample, export_dataset_csv, generate
from fastnn.factor.projection import (
    DiversifiedProjection,
    estimate_dpm_pca,
    projection_diagnostics,
    random_projection,
    surrogate_factor,
)
from fastnn.factor.regression_fns import regression_additive_random, regression_fast

__all__ = [
    "DiversifiedProjection",
    "FactorDgp",
    "FactorSample",
    "Sample",
    "estimate_dpm_pca",
    "export_dataset_csv",
    "generate",
    "projection_diagnostics",
    "random_projection",
    "regression_additive_random",
    "regression_fast",
    "surrogate_factor",
]
