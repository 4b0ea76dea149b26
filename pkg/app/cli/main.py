"""
fastnn command line.

Subcommands:
  simulate {exp1,exp2,exp3,fast,fanam,null-case}   Monte-Carlo study -> results.csv, summary.json
  realdata                                         repeated-split study on a CSV panel
  fit / predict / eval                             single model on a CSV dataset
  netbuild-audit                                   check every network construction against its budget
  dpm                                              diversified projection matrix from unlabeled rows
  runs                                             list stored runs or the events of one run

Exit codes: 0 ok, 1 contract violation, 2 bad config/input/shape/numerics, 3 I/O error.

Run:
  python main.py simulate exp1 --p 100,1000 --trials 5 --seed 42
  python main.py fit --data panel.csv --response UEMP15T26 --estimator fast-nn --model model.json
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import pandas as pd

from app.core import config as run_config
from app.core import io_utils, reports
from app.core.audit import append_event, read_events
from app.core.datasets import inner_split, load_dataset, parse_rows
from app.core.model_store import StoredModel, load_model, save_model
from app.core.paths import output_root, run_paths
from app.core.runs import finish_run, list_runs, new_run, run_exists, stage
from fastnn.bench.metrics import r2_oos
from fastnn.bench.runner import fit_estimator, run_experiment
from fastnn.errors import ConfigError, ContractViolation, InputError, NumericError, ShapeError
from fastnn.estimators.linear import LINEAR_METHODS
from fastnn.estimators.neural import mse
from fastnn.estimators.scaling import ScaledModel, Standardizer
from fastnn.factor.projection import estimate_dpm_pca
from fastnn.netbuild.audit import FAULTS, run_audit, summarize_rows, violations

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"
SIMULATIONS = {
    "exp1": "exp1",
    "exp2": "exp2",
    "exp3": "exp3",
    "fast": "fast-sim",
    "fanam": "fanam-sim",
    "null-case": "null-case",
}
FIT_ESTIMATORS = ("fast-nn", "far-nn", "fanam", "vanilla", "lasso", "pcr", "farm-lite", "min-l2")
USES_PROJECTION = ("fast-nn", "far-nn", "fanam", "pcr", "farm-lite")


# ---------------------------------------------------------------------------
# Parsing helpers
# ---------------------------------------------------------------------------


def _int_list(text: Optional[str]) -> Optional[tuple]:
    if text is None:
        return None
    try:
        return tuple(int(v) for v in text.split(",") if v.strip())
    except ValueError as exc:
        raise ConfigError(f"expected a comma-separated list of integers, got {text!r}") from exc


def _str_list(text: Optional[str]) -> Optional[tuple]:
    if text is None:
        return None
    return tuple(v.strip() for v in text.split(",") if v.strip())


def _progress(args) -> bool:
    return not args.quiet and sys.stderr.isatty()


def _override_epochs(plan, epochs: Optional[int]):
    return plan if epochs is None else replace(plan, train=replace(plan.train, epochs=epochs))


def _write_run_reports(paths, experiment: str, records, xlsx: bool) -> None:
    reports.write_results_csv(paths.results_csv, records)
    reports.write_timings_csv(paths.timings_csv, records)
    summary = reports.write_summary_json(paths.summary_json, experiment, records)
    if xlsx:
        reports.write_summary_xlsx(paths.summary_xlsx, experiment, summary)
    for line in summary.to_string(index=False).splitlines():
        print(line)


def _log_failures(paths, records) -> None:
    for record in records:
        if record.status != "ok":
            append_event(paths, {
                "event": "estimator_failed", "estimator": record.estimator, "p": record.p,
                "variant": record.variant, "trial": record.trial, "message": record.message,
            })


# ---------------------------------------------------------------------------
# simulate / realdata
# ---------------------------------------------------------------------------


def cmd_simulate(args) -> int:
    experiment = SIMULATIONS[args.experiment]
    config = run_config.load_run_config(experiment, args.config, args.full_scale)
    plan = run_config.apply_overrides(
        config.plan,
        p_grid=_int_list(args.p),
        trials=args.trials,
        master_seed=args.seed,
        n1_grid=_int_list(args.n1),
        regression=args.regression,
        roster=_str_list(args.roster),
    )
    config.plan = _override_epochs(plan, args.epochs)

    paths = new_run("simulate", output_root(args.output or config.output_dir), args.run_name)
    run_config.write_resolved_config(paths.config_path, config)
    with stage(paths, "simulate"):
        records = run_experiment(
            config.plan, jobs=args.jobs, progress=_progress(args),
            heat_sink=lambda p, variant, frame: reports.write_heat_csv(paths.heat_csv(p, variant), frame),
        )
        _log_failures(paths, records)
    with stage(paths, "report"):
        _write_run_reports(paths, experiment, records, args.xlsx)
    finish_run(paths)
    print(f"run written to {paths.root}")
    return 0


def cmd_realdata(args) -> int:
    config = run_config.load_run_config("real-data", args.config, False)
    dataset = args.dataset or config.data.get("path")
    response = args.response or config.data.get("response")
    if not dataset or not response:
        raise ConfigError("realdata needs --dataset and --response (or [data] path/response in the config)")
    plan = run_config.apply_overrides(
        config.plan,
        split=args.split,
        inner_split=args.inner_split,
        trials=args.repeats,
        master_seed=args.seed,
        roster=_str_list(args.roster),
    )
    config.plan = _override_epochs(plan, args.epochs)
    config.data = {"path": str(dataset), "response": response}

    paths = new_run("realdata", output_root(args.output or config.output_dir), args.run_name)
    run_config.write_resolved_config(paths.config_path, config)
    with stage(paths, "load"):
        sample, _ = load_dataset(Path(dataset), response)
    with stage(paths, "simulate"):
        records = run_experiment(config.plan, jobs=args.jobs, progress=_progress(args), data=sample,
                                 heat_sink=lambda p, v, frame: reports.write_heat_csv(paths.heat_csv(p, v), frame))
        _log_failures(paths, records)
    with stage(paths, "report"):
        _write_run_reports(paths, "real-data", records, args.xlsx)
    finish_run(paths)
    print(f"run written to {paths.root}")
    return 0


# ---------------------------------------------------------------------------
# fit / predict / eval
# ---------------------------------------------------------------------------


def cmd_fit(args) -> int:
    if args.estimator not in FIT_ESTIMATORS:
        raise ConfigError(f"unknown estimator {args.estimator!r}; expected one of {FIT_ESTIMATORS}")
    plan = run_config.load_run_config("real-data", args.config).plan
    plan = _override_epochs(plan, args.epochs)
    if args.k is not None:
        plan = replace(plan, pcr_k=args.k)

    sample, dataset = load_dataset(Path(args.data), args.response, standardize=not args.no_standardize)
    rows = parse_rows(args.rows, len(sample))
    train_idx, valid_idx = inner_split(rows, args.inner_split, args.split_seed)
    raw_train, raw_valid = sample.subset(train_idx), sample.subset(valid_idx)
    scaler = Standardizer.fit(
        raw_train.x, raw_train.y, standardize_x=dataset.standardize,
        scale_response=args.estimator not in LINEAR_METHODS,
    )
    train, valid = scaler.transform(raw_train), scaler.transform(raw_valid)

    W = None
    if args.estimator in USES_PROJECTION and not (args.estimator in ("pcr", "farm-lite") and plan.pcr_k is not None):
        W = estimate_dpm_pca(train.x, min(plan.r_bar, *train.x.shape))
    model = fit_estimator(args.estimator, plan, train, valid, W, replace(plan.train, seed=args.seed), tuned=True)
    wrapped = ScaledModel(model, scaler)
    stored = StoredModel(wrapped, dataset.covariates, args.response, float(np.mean(raw_train.y)))
    save_model(Path(args.model), stored)
    valid_mse = mse(wrapped.predict(raw_valid.x), raw_valid.y)
    print(f"{args.estimator}: trained on {len(train)} rows, validation MSE {valid_mse:.6g}")
    print(f"model written to {args.model}")
    return 0


def cmd_predict(args) -> int:
    stored = load_model(Path(args.model))
    sample, dataset = load_dataset(Path(args.data), None, covariates=stored.covariates)
    stored.check_columns(dataset.covariates)
    rows = parse_rows(args.rows, len(sample))
    pred = stored.model.predict(sample.x[rows])
    table = pd.read_csv(args.data, skipinitialspace=True).iloc[rows].copy()
    table["prediction"] = pred
    out = Path(args.out) if args.out else Path(args.data).with_name(Path(args.data).stem + "_predictions.csv")
    out.parent.mkdir(parents=True, exist_ok=True)
    table.to_csv(out, index=False)
    print(f"{len(rows)} predictions written to {out}")
    return 0


def cmd_eval(args) -> int:
    stored = load_model(Path(args.model))
    sample, dataset = load_dataset(Path(args.data), stored.response, covariates=stored.covariates)
    stored.check_columns(dataset.covariates)
    rows = parse_rows(args.rows, len(sample))
    pred = stored.model.predict(sample.x[rows])
    y = sample.y[rows]
    r2 = r2_oos(pred, y, stored.y_bar_train)
    print(f"r2_oos {r2:.6f}")
    print(f"mse {mse(pred, y):.6g}")
    return 0


# ---------------------------------------------------------------------------
# netbuild-audit / dpm
# ---------------------------------------------------------------------------


def cmd_netbuild_audit(args) -> int:
    grid = None
    if args.grid:
        doc = run_config.read_toml(Path(args.grid))
        if set(doc) - {"audit"}:
            raise ConfigError(f"unknown config key '{sorted(set(doc) - {'audit'})[0]}'")
        grid = doc.get("audit", {})
    paths = new_run("netbuild-audit", output_root(args.output), args.run_name)
    with stage(paths, "audit"):
        rows = run_audit(grid, seed=args.seed, fault=args.inject_fault)
    with stage(paths, "report"):
        reports.write_audit_csv(paths.netbuild_audit_csv, rows)
    bad = violations(rows)
    for row in bad:
        print(f"violation: {row.construction} [{row.params}] {row.quantity} declared {row.declared:g} "
              f"measured {row.measured:g}")
        append_event(paths, {"event": "contract_violation", **row.to_dict()})
    finish_run(paths, "violations" if bad else "complete")
    checked, failed = summarize_rows(rows)
    print(f"{checked} checks, {failed} violations; audit written to {paths.netbuild_audit_csv}")
    return 1 if bad else 0


def cmd_dpm(args) -> int:
    paths = new_run("dpm", output_root(args.output), args.run_name)
    with stage(paths, "load"):
        sample, dataset = load_dataset(Path(args.data), args.response)
        rows = parse_rows(args.rows, len(sample))
        x = sample.x[rows]
        if args.standardize:
            x = Standardizer.fit(x).transform_x(x)
    with stage(paths, "estimate"):
        projection = estimate_dpm_pca(x, args.r_bar)
    with stage(paths, "report"):
        W = pd.DataFrame(
            projection.W, index=dataset.covariates, columns=[f"w{j + 1}" for j in range(projection.r_bar)]
        )
        W.to_csv(paths.root / "W.csv", index_label="covariate")
        io_utils.write_json(paths.root / "dpm.json", {
            "r_bar": projection.r_bar,
            "n1": int(x.shape[0]),
            "p": projection.p,
            "eigenvalues": projection.eigenvalues.tolist(),
            "covariates": dataset.covariates,
        })
    finish_run(paths)
    print(f"W ({projection.p} x {projection.r_bar}) written to {paths.root / 'W.csv'}")
    return 0


# ---------------------------------------------------------------------------
# runs
# ---------------------------------------------------------------------------

EVENT_STAMPS = ("ts", "event", "run_id", "command", "config_hash")


def cmd_runs(args) -> int:
    root = output_root(args.output)
    if args.show is None:
        metas = list_runs(root)
        for meta in metas:
            print(f"{meta.get('id')}  {meta.get('command')}  {meta.get('status')}  {meta.get('created_at')}")
        print(f"{len(metas)} runs under {root}")
        return 0

    if not run_exists(args.show, root):
        raise InputError(f"no run {args.show!r} under {root}")
    for event in read_events(run_paths(args.show, root), args.event):
        detail = " ".join(f"{k}={v}" for k, v in event.items() if k not in EVENT_STAMPS and v is not None)
        print(f"{event.get('ts')} {event.get('event')} {detail}".rstrip())
    return 0


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--output", type=str, default=None, help="Output root (default $FASTNN_OUTPUT_DIR or runs/)")
    parser.add_argument("--run-name", type=str, default=None, help="Run directory name")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fastnn", description="Factor augmented neural regression")
    ap.add_argument("--log-level", type=str, default="INFO", help="Logging level")
    sub = ap.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="Run a Monte-Carlo study")
    sim.add_argument("experiment", choices=sorted(SIMULATIONS))
    sim.add_argument("--config", type=Path, default=None, help="TOML run config")
    sim.add_argument("--full-scale", action="store_true", help="Full-size preset instead of the desk preset")
    sim.add_argument("--p", type=str, default=None, help="Comma-separated ambient dimensions")
    sim.add_argument("--trials", type=int, default=None)
    sim.add_argument("--seed", type=int, default=None, help="Master seed")
    sim.add_argument("--n1", type=str, default=None, help="Comma-separated unlabeled sizes (exp3)")
    sim.add_argument("--regression", type=str, default=None, help="Regression function id, e.g. fast2")
    sim.add_argument("--roster", type=str, default=None, help="Comma-separated estimator ids")
    sim.add_argument("--epochs", type=int, default=None)
    sim.add_argument("--jobs", type=int, default=1, help="Worker processes")
    sim.add_argument("--xlsx", action="store_true", help="Also write summary.xlsx")
    sim.add_argument("--quiet", action="store_true", help="No progress bar")
    _add_run_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    real = sub.add_parser("realdata", help="Repeated-split study on a CSV dataset")
    real.add_argument("--dataset", type=Path, default=None)
    real.add_argument("--response", type=str, default=None)
    real.add_argument("--config", type=Path, default=None)
    real.add_argument("--split", type=float, default=None, help="Leading fraction used for train+valid")
    real.add_argument("--inner-split", type=float, default=None, help="Train fraction inside the leading rows")
    real.add_argument("--repeats", type=int, default=None)
    real.add_argument("--seed", type=int, default=None)
    real.add_argument("--roster", type=str, default=None)
    real.add_argument("--epochs", type=int, default=None)
    real.add_argument("--jobs", type=int, default=1)
    real.add_argument("--xlsx", action="store_true")
    real.add_argument("--quiet", action="store_true")
    _add_run_flags(real)
    real.set_defaults(func=cmd_realdata)

    fit = sub.add_parser("fit", help="Fit one estimator on a CSV dataset and save it")
    fit.add_argument("--data", type=str, required=True)
    fit.add_argument("--response", type=str, required=True)
    fit.add_argument("--estimator", type=str, required=True, choices=FIT_ESTIMATORS)
    fit.add_argument("--model", type=str, required=True, help="Output model JSON")
    fit.add_argument("--config", type=Path, default=None)
    fit.add_argument("--rows", type=str, default=None, help="Training rows as start:stop")
    fit.add_argument("--inner-split", type=float, default=0.7)
    fit.add_argument("--split-seed", type=int, default=0)
    fit.add_argument("--seed", type=int, default=0, help="Training seed")
    fit.add_argument("--epochs", type=int, default=None)
    fit.add_argument("--k", type=int, default=None, help="Factor count for pcr / farm-lite")
    fit.add_argument("--no-standardize", action="store_true")
    fit.set_defaults(func=cmd_fit)

    pred = sub.add_parser("predict", help="Append predictions to a CSV")
    pred.add_argument("--data", type=str, required=True)
    pred.add_argument("--model", type=str, required=True)
    pred.add_argument("--rows", type=str, default=None)
    pred.add_argument("--out", type=str, default=None)
    pred.set_defaults(func=cmd_predict)

    ev = sub.add_parser("eval", help="Out-of-sample R^2 of a saved model")
    ev.add_argument("--data", type=str, required=True)
    ev.add_argument("--model", type=str, required=True)
    ev.add_argument("--rows", type=str, default=None)
    ev.set_defaults(func=cmd_eval)

    audit = sub.add_parser("netbuild-audit", help="Check network constructions against their budgets")
    audit.add_argument("--grid", type=str, default=None, help="TOML file with an [audit] section")
    audit.add_argument("--inject-fault", type=str, default=None, choices=FAULTS)
    audit.add_argument("--seed", type=int, default=0)
    _add_run_flags(audit)
    audit.set_defaults(func=cmd_netbuild_audit)

    dpm = sub.add_parser("dpm", help="Estimate a diversified projection matrix")
    dpm.add_argument("--data", type=str, required=True)
    dpm.add_argument("--r-bar", type=int, required=True)
    dpm.add_argument("--response", type=str, default=None, help="Column to leave out of the covariates")
    dpm.add_argument("--rows", type=str, default=None)
    dpm.add_argument("--standardize", action="store_true")
    _add_run_flags(dpm)
    dpm.set_defaults(func=cmd_dpm)

    runs = sub.add_parser("runs", help="List stored runs, or show the event log of one")
    runs.add_argument("--output", type=str, default=None, help="Output root (default $FASTNN_OUTPUT_DIR or runs/)")
    runs.add_argument("--show", type=str, default=None, metavar="RUN_ID", help="Print the events of this run")
    runs.add_argument("--event", type=str, default=None, help="Only events of this kind, e.g. stage_error")
    runs.set_defaults(func=cmd_runs)
    return ap


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, ContractViolation):
        return 1
    if isinstance(exc, (ConfigError, InputError, ShapeError, NumericError)):
        return 2
    if isinstance(exc, OSError):
        return 3
    raise exc


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format=LOG_FORMAT)
    try:
        return args.func(args)
    except (ContractViolation, ConfigError, InputError, ShapeError, NumericError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
