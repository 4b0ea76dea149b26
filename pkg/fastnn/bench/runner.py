"""
Monte-Carlo runner: one task per (p, variant, trial), every estimator in the
roster fitted on the same draws, one TrialRecord per estimator.

Tasks are independent. With jobs > 1 they run in a process pool; records are
merged back in plan order so the output does not depend on completion order.
"""

from __future__ import annotations

import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field, replace
from typing import Any, Callable, Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from tqdm import tqdm

from fastnn.bench.heatdata import export_theta_heatdata
from fastnn.bench.metrics import eval_mse, eval_r2_oos
from fastnn.bench.plans import ExperimentPlan
from fastnn.errors import ConfigError, ShapeError
from fastnn.estimators.fanam import fit_fanam
from fastnn.estimators.fast_nn import FastNnModel, fit_fast_nn, select_penalty_lambda
from fastnn.estimators.linear import (
    fit_farm_lite,
    fit_lasso,
    fit_min_l2,
    fit_pcr,
    select_lasso_lambda,
)
from fastnn.estimators.neural import BASELINE_KINDS, fit_baseline_nn, fit_far_nn, mse
from fastnn.estimators.scaling import ScaledModel, Standardizer
from fastnn.factor.dgp import FactorDgp, FactorSample, generate
from fastnn.factor.projection import estimate_dpm_pca
from fastnn.nets.optim import TrainConfig

logger = logging.getLogger(__name__)

RESULTS_SCHEMA_VERSION = 1
HeatSink = Callable[[int, str, pd.DataFrame], None]


@dataclass
class TrialRecord:
    experiment: str
    estimator: str
    p: int
    variant: str
    trial: int
    seed: int
    metric: str
    value: float
    status: str = "ok"
    message: str = ""
    wall_time: float = 0.0
    hyper: Dict[str, Any] = field(default_factory=dict)

    def to_row(self) -> dict:
        """CSV row without the wall time, so result files are reproducible."""
        row = asdict(self)
        row.pop("wall_time")
        row["hyper"] = json.dumps(self.hyper, sort_keys=True)
        return row


@dataclass
class _TaskOutcome:
    key: Tuple[int, int, int]
    records: List[TrialRecord]
    heat: Optional[pd.DataFrame] = None


# ---------------------------------------------------------------------------
# Estimator dispatch
# ---------------------------------------------------------------------------


def _model_hyper(model) -> Dict[str, Any]:
    inner = model.model if isinstance(model, ScaledModel) else model
    return dict(getattr(inner, "hyper", None) or getattr(inner, "extra", {}))


def fit_estimator(
    name: str,
    plan: ExperimentPlan,
    train: FactorSample,
    valid: FactorSample,
    W,
    config: TrainConfig,
    important: Sequence[int] = (),
    tuned: bool = False,
):
    """Fit one roster entry. tuned selects penalty levels on the validation set."""
    r_bar = W.r_bar if W is not None else plan.r_bar
    if name == "far-nn":
        return fit_far_nn(train, valid, W, plan.arch, config)
    if name in BASELINE_KINDS:
        return fit_baseline_nn(name, train, valid, plan.arch, config, W=W, important=important)
    if name == "fast-nn":
        if tuned:
            return select_penalty_lambda(
                train, valid, W, plan.arch, plan.penalty.tau, plan.fast_lambda_grid, config, plan.n_sel
            )
        return fit_fast_nn(train, valid, W, plan.arch, plan.penalty, config, plan.n_sel)
    if name == "fanam":
        return fit_fanam(train, valid, W, plan.arch, plan.fanam_lam, config, sub_arch=plan.fanam_sub_arch())
    if name == "min-l2":
        return fit_min_l2(train.x, train.y)
    if name == "lasso":
        if tuned:
            return select_lasso_lambda(train.x, train.y, valid.x, valid.y, plan.lasso_grid)
        return fit_lasso(train.x, train.y, plan.lasso_lam)
    k = plan.pcr_k if plan.pcr_k is not None else r_bar
    if name == "pcr":
        return fit_pcr(train.x, train.y, k)
    if name == "farm-lite":
        if not tuned:
            return fit_farm_lite(train.x, train.y, k, plan.lasso_lam)
        best_score, best = math.inf, None
        for lam in plan.lasso_grid:
            model = fit_farm_lite(train.x, train.y, k, lam)
            score = mse(model.predict(valid.x), valid.y)
            if best is None or score < best_score:
                best_score, best = score, model
        best.extra["lambda_grid"] = list(plan.lasso_grid)
        return best
    raise ConfigError(f"unknown estimator {name!r}")


def _needs_projection(name: str) -> bool:
    return name in ("far-nn", "nn-joint", "dropout-joint", "fast-nn", "fanam")


def _fit_roster(
    plan: ExperimentPlan,
    p: int,
    variant: str,
    trial: int,
    seed: int,
    train: FactorSample,
    valid: FactorSample,
    projection_or_error,
    config: TrainConfig,
    evaluate: Callable[[Any], float],
    metric: str,
    wrap: Callable[[Any], Any] = lambda m: m,
    important: Sequence[int] = (),
    extra_hyper: Optional[Dict[str, Any]] = None,
    tuned: bool = False,
) -> Tuple[List[TrialRecord], Optional[pd.DataFrame]]:
    records: List[TrialRecord] = []
    heat = None
    for name in plan.roster:
        started = time.perf_counter()
        record = TrialRecord(plan.experiment, name, p, variant, trial, seed, metric, math.nan)
        try:
            W = projection_or_error
            if isinstance(W, Exception):
                if _needs_projection(name) or (name in ("pcr", "farm-lite") and plan.pcr_k is None):
                    raise W
                W = None
            model = fit_estimator(name, plan, train, valid, W, config, important, tuned)
            record.value = float(evaluate(wrap(model)))
            record.hyper = _model_hyper(model)
            if isinstance(model, FastNnModel) and trial == 0:
                heat = export_theta_heatdata(model, plan.heat_top_cols)
        except Exception as exc:
            record.status = "failed"
            record.message = f"{type(exc).__name__}: {exc}"
            logger.warning("%s failed on p=%d %s trial %d: %s", name, p, variant or "-", trial, exc)
        record.hyper.update(extra_hyper or {})
        record.wall_time = time.perf_counter() - started
        records.append(record)
    return records, heat


# ---------------------------------------------------------------------------
# Simulation trials
# ---------------------------------------------------------------------------


def trial_seed_sequence(master_seed: int, p: int, trial: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([master_seed, p, trial])


def run_trial(plan: ExperimentPlan, p: int, trial: int, variant: str = "", n1: Optional[int] = None):
    """Draw one trial's data and fit the roster. Variants of the same (p, trial)
    share the labeled draws; only the unlabeled draw size changes."""
    n1 = plan.unlabeled_size if n1 is None else n1
    root = trial_seed_sequence(plan.master_seed, p, trial)
    dgp_ss, labeled_ss, unlabeled_ss, train_ss = root.spawn(4)
    seed = int(train_ss.generate_state(1)[0])
    dgp = FactorDgp.create(
        p, plan.r, plan.regression, plan.noise_var, seed=int(dgp_ss.generate_state(1)[0])
    )
    rng = np.random.default_rng(labeled_ss)
    train = generate(dgp, plan.n_train, rng)
    valid = generate(dgp, plan.n_valid, rng)
    test = generate(dgp, plan.n_test, rng)
    unlabeled = generate(dgp, n1, np.random.default_rng(unlabeled_ss))

    r_bar = min(plan.r_bar, n1)
    try:
        projection = estimate_dpm_pca(unlabeled.x, r_bar)
    except Exception as exc:
        projection = exc
    extra = {"r_bar": r_bar, "n1": n1}
    if dgp.assignment:
        extra["assignment"] = list(dgp.assignment)
    return _fit_roster(
        plan, p, variant, trial, seed, train, valid, projection, replace(plan.train, seed=seed),
        evaluate=lambda model: eval_mse(model, test), metric="mse",
        important=dgp.important_coords, extra_hyper=extra,
    )


# ---------------------------------------------------------------------------
# Real-data repeats
# ---------------------------------------------------------------------------


def chronological_split(n: int, fraction: float) -> int:
    """Number of leading rows used for training and validation."""
    n_fit = int(math.floor(fraction * n))
    if n_fit < 2 or n_fit >= n:
        raise ShapeError(f"split {fraction} of {n} rows leaves no room for both parts")
    return n_fit


def run_real_repeat(plan: ExperimentPlan, data: FactorSample, repeat: int):
    """One random 70/30 train/valid split of the leading rows; the trailing rows are the test set."""
    n_fit = chronological_split(len(data), plan.split)
    root = trial_seed_sequence(plan.master_seed, 0, repeat)
    split_ss, train_ss = root.spawn(2)
    seed = int(train_ss.generate_state(1)[0])
    order = np.random.default_rng(split_ss).permutation(n_fit)
    n_train = int(round(plan.inner_split * n_fit))
    if n_train < 1 or n_train >= n_fit:
        raise ShapeError(f"inner split {plan.inner_split} of {n_fit} rows leaves an empty part")
    raw_train, raw_valid = data.subset(np.sort(order[:n_train])), data.subset(np.sort(order[n_train:]))
    test = data.subset(np.arange(n_fit, len(data)))

    scaler = Standardizer.fit(raw_train.x, raw_train.y, scale_response=True)
    train, valid = scaler.transform(raw_train), scaler.transform(raw_valid)
    r_bar = min(plan.r_bar, len(train))
    try:
        projection = estimate_dpm_pca(train.x, r_bar)
    except Exception as exc:
        projection = exc
    y_bar = float(np.mean(raw_train.y))
    return _fit_roster(
        plan, data.p, "", repeat, seed, train, valid, projection, replace(plan.train, seed=seed),
        evaluate=lambda model: eval_r2_oos(model, test, y_bar), metric="r2_oos",
        wrap=lambda model: ScaledModel(model, scaler), extra_hyper={"r_bar": r_bar}, tuned=True,
    )


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------


def _tasks(plan: ExperimentPlan) -> Iterator[tuple]:
    if plan.experiment == "real-data":
        for repeat in range(plan.trials):
            yield (0, 0, repeat), ("real", repeat)
        return
    for p_index, p in enumerate(plan.p_grid):
        for v_index, (label, n1) in enumerate(plan.variants()):
            for trial in range(plan.trials):
                yield (p_index, v_index, trial), ("sim", p, trial, label, n1)


def _run_task(plan: ExperimentPlan, key, task, data: Optional[FactorSample]) -> _TaskOutcome:
    if task[0] == "real":
        records, heat = run_real_repeat(plan, data, task[1])
    else:
        _, p, trial, label, n1 = task
        records, heat = run_trial(plan, p, trial, label, n1)
    return _TaskOutcome(key, records, heat)


def run_experiment(
    plan: ExperimentPlan,
    jobs: int = 1,
    progress: bool = False,
    heat_sink: Optional[HeatSink] = None,
    data: Optional[FactorSample] = None,
) -> List[TrialRecord]:
    """Run every task of the plan; estimator failures are recorded, not raised."""
    if jobs < 1:
        raise ConfigError(f"jobs must be >= 1, got {jobs}")
    if plan.experiment == "real-data" and data is None:
        raise ConfigError("the real-data plan needs a dataset")
    tasks = list(_tasks(plan))
    outcomes: List[_TaskOutcome] = []
    bar = tqdm(total=len(tasks), desc=plan.experiment, unit="trial", disable=not progress)
    try:
        if jobs == 1:
            for key, task in tasks:
                outcomes.append(_run_task(plan, key, task, data))
                bar.update(1)
        else:
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                futures = [pool.submit(_run_task, plan, key, task, data) for key, task in tasks]
                for future in as_completed(futures):
                    outcomes.append(future.result())
                    bar.update(1)
    finally:
        bar.close()

    outcomes.sort(key=lambda o: o.key)
    records: List[TrialRecord] = []
    for outcome in outcomes:
        records.extend(outcome.records)
        if outcome.heat is not None and heat_sink is not None:
            first = outcome.records[0]
            heat_sink(first.p, first.variant, outcome.heat)
    failed = sum(r.status != "ok" for r in records)
    logger.info("%s: %d records, %d failed", plan.experiment, len(records), failed)
    return records


def records_frame(records: Sequence[TrialRecord]) -> pd.DataFrame:
    columns = [f for f in TrialRecord.__dataclass_fields__ if f != "wall_time"]
    return pd.DataFrame([r.to_row() for r in records], columns=columns)


def summarize(records: Sequence[TrialRecord]) -> pd.DataFrame:
    """Mean and sd of the metric per (estimator, p, variant), with completion counts."""
    columns = ["estimator", "p", "variant", "metric", "mean", "sd", "completed", "failed"]
    if not records:
        return pd.DataFrame(columns=columns)
    frame = pd.DataFrame(
        [
            {"estimator": r.estimator, "p": r.p, "variant": r.variant, "metric": r.metric,
             "value": r.value if r.status == "ok" else np.nan, "ok": r.status == "ok"}
            for r in records
        ]
    )
    grouped = frame.groupby(["estimator", "p", "variant", "metric"], sort=True)
    out = grouped.agg(
        mean=("value", "mean"),
        sd=("value", "std"),
        completed=("ok", "sum"),
        failed=("ok", lambda s: int((~s).sum())),
    ).reset_index()
    out["completed"] = out["completed"].astype(int)
    return out[columns]
