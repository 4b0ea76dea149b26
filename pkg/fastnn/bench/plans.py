"""
Experiment plans for the Monte-Carlo studies and the real-data protocol.

desk_plan() gives minutes-scale defaults; full_plan() restores the full-size
settings (width 300, 200 epochs, lr 1e-4, n_test 1e5, 200 trials).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, Optional, Tuple

from fastnn.errors import ConfigError
from fastnn.estimators.neural import ArchConfig
from fastnn.estimators.penalties import ClippedL1Config
from fastnn.factor.dgp import REGRESSION_IDS
from fastnn.nets.optim import TrainConfig

EXPERIMENTS = ("exp1", "exp2", "exp3", "fast-sim", "fanam-sim", "null-case", "real-data")
ESTIMATORS = (
    "oracle",
    "oracle-factor",
    "far-nn",
    "vanilla",
    "nn-joint",
    "dropout-vanilla",
    "dropout-joint",
    "fast-nn",
    "fanam",
    "min-l2",
    "lasso",
    "pcr",
    "farm-lite",
)
# estimators that read only the covariates; the real-data protocol has no latent truth
OBSERVED_ONLY = tuple(e for e in ESTIMATORS if not e.startswith("oracle"))

FULL_P_GRID = tuple(range(100, 1001, 100)) + (2000, 3000, 4000)


@dataclass
class ExperimentPlan:
    experiment: str
    p_grid: Tuple[int, ...] = (100, 1000)
    n_train: int = 500
    n_valid: int = 150
    n_test: int = 10_000
    n_unlabeled: Optional[int] = None
    n1_grid: Tuple[int, ...] = ()
    trials: int = 20
    roster: Tuple[str, ...] = ("far-nn",)
    r: int = 5
    r_bar: int = 10
    regression: str = "additive-random"
    noise_var: float = 0.3
    master_seed: int = 0
    arch: ArchConfig = field(default_factory=ArchConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    penalty: ClippedL1Config = field(default_factory=ClippedL1Config)
    n_sel: int = 10
    fanam_lam: float = 1e-3
    fanam_sub_width: int = 16
    fanam_sub_depth: int = 2
    lasso_lam: float = 0.05
    pcr_k: Optional[int] = None
    heat_top_cols: int = 40
    split: float = 0.6
    inner_split: float = 0.7
    lasso_grid: Tuple[float, ...] = (1e-3, 3e-3, 1e-2, 3e-2, 1e-1, 3e-1)
    fast_lambda_grid: Tuple[float, ...] = (1e-3, 1e-2, 1e-1)

    def __post_init__(self) -> None:
        self.p_grid = tuple(int(p) for p in self.p_grid)
        self.n1_grid = tuple(int(n) for n in self.n1_grid)
        self.roster = tuple(self.roster)
        self.lasso_grid = tuple(float(v) for v in self.lasso_grid)
        self.fast_lambda_grid = tuple(float(v) for v in self.fast_lambda_grid)
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}; expected one of {EXPERIMENTS}")
        if self.trials < 1:
            raise ConfigError(f"trials must be >= 1, got {self.trials}")
        if not self.roster:
            raise ConfigError("estimator roster is empty")
        unknown = [e for e in self.roster if e not in ESTIMATORS]
        if unknown:
            raise ConfigError(f"unknown estimators {unknown}; expected a subset of {ESTIMATORS}")
        if self.experiment == "real-data":
            latent = [e for e in self.roster if e not in OBSERVED_ONLY]
            if latent:
                raise ConfigError(f"real data has no latent truth; cannot run {latent}")
            if not (0.0 < self.split < 1.0 and 0.0 < self.inner_split < 1.0):
                raise ConfigError("split and inner_split must lie in (0, 1)")
            return
        if not self.p_grid or any(p < 1 for p in self.p_grid):
            raise ConfigError(f"p grid must be nonempty and positive, got {self.p_grid}")
        if self.experiment == "exp3" and not self.n1_grid:
            raise ConfigError("exp3 needs a nonempty n1 grid")
        if self.regression not in REGRESSION_IDS:
            raise ConfigError(f"unknown regression {self.regression!r}")
        if min(self.n_train, self.n_valid, self.n_test) < 1:
            raise ConfigError("n_train, n_valid and n_test must be >= 1")

    @property
    def unlabeled_size(self) -> int:
        """n1 = ceil(0.1 n_train) unless set."""
        return self.n_unlabeled if self.n_unlabeled is not None else math.ceil(0.1 * self.n_train)

    def variants(self) -> Tuple[Tuple[str, int], ...]:
        """(label, n1) pairs; only exp3 sweeps n1."""
        if self.experiment == "exp3":
            return tuple((f"n1={n1}", n1) for n1 in self.n1_grid)
        return (("", self.unlabeled_size),)

    def fanam_sub_arch(self) -> ArchConfig:
        return ArchConfig(self.fanam_sub_depth, self.fanam_sub_width, self.arch.truncation, self.arch.weight_bound)

    def to_dict(self) -> dict:
        data = asdict(self)
        data["arch"] = self.arch.to_dict()
        data["train"] = self.train.to_dict()
        data["penalty"] = self.penalty.to_dict()
        return data


# per-experiment settings layered over the ExperimentPlan defaults
_EXPERIMENT_DEFAULTS: Dict[str, dict] = {
    "exp1": dict(roster=("oracle", "far-nn", "vanilla", "nn-joint")),
    "exp2": dict(roster=("oracle", "far-nn", "dropout-vanilla", "dropout-joint")),
    "exp3": dict(roster=("far-nn",), p_grid=(500,), n1_grid=(4, 8, 16, 64)),
    "fast-sim": dict(
        roster=("oracle", "oracle-factor", "fast-nn"), r=4, regression="fast1",
        n_train=1000, n_valid=300, p_grid=(500,),
    ),
    "fanam-sim": dict(
        roster=("oracle", "far-nn", "fanam", "pcr", "lasso"), r=4, regression="fanam-additive",
        n_train=1000, n_valid=300, p_grid=(200,),
    ),
    "null-case": dict(
        roster=("min-l2", "far-nn"), regression="null", noise_var=1.0,
        n_train=200, n_valid=60, p_grid=(400,), trials=50,
    ),
    "real-data": dict(
        roster=("fast-nn", "farm-lite", "lasso", "pcr"), r_bar=5, trials=30,
        arch=ArchConfig(depth=3, width=32), penalty=ClippedL1Config(lam=1e-2, tau=0.1),
    ),
}

_FULL_OVERRIDES: Dict[str, dict] = {
    "exp1": dict(p_grid=FULL_P_GRID),
    "exp2": dict(p_grid=FULL_P_GRID),
    "exp3": dict(p_grid=(100, 500, 1000, 5000), n1_grid=(4, 8, 16, 32, 64)),
    "fast-sim": dict(p_grid=FULL_P_GRID),
    "fanam-sim": dict(p_grid=FULL_P_GRID),
}


def desk_plan(experiment: str, **overrides) -> ExperimentPlan:
    if experiment not in EXPERIMENTS:
        raise ConfigError(f"unknown experiment {experiment!r}; expected one of {EXPERIMENTS}")
    values = dict(_EXPERIMENT_DEFAULTS.get(experiment, {}))
    values.update(overrides)
    return ExperimentPlan(experiment=experiment, **values)


def full_plan(experiment: str, **overrides) -> ExperimentPlan:
    base = desk_plan(experiment)
    values = dict(_FULL_OVERRIDES.get(experiment, {}))
    if experiment != "real-data":
        values.update(
            n_test=100_000,
            trials=200 if experiment != "null-case" else base.trials,
            arch=replace(base.arch, width=300),
            train=replace(base.train, epochs=200, lr=1e-4),
        )
    values.update(overrides)
    return replace(base, **values)
