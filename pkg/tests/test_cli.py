import json

import numpy as np
import pandas as pd
import pytest

from app.cli.main import exit_code_for, main
from app.core.runs import load_run_meta
from app.core.paths import run_paths
from app.core import config as run_config
from fastnn.errors import ConfigError, ContractViolation, InputError, NumericError, ShapeError
from fastnn.factor import FactorDgp, export_dataset_csv, generate


@pytest.fixture
def constant_csv(tmp_path):
    rng = np.random.default_rng(0)
    frame = pd.DataFrame(rng.normal(size=(10, 2)), columns=["x1", "x2"])
    frame["y"] = 3.0
    path = tmp_path / "constant.csv"
    frame.to_csv(path, index=False)
    return path


@pytest.fixture
def factor_csv(tmp_path):
    sample = generate(FactorDgp.create(8, 2, seed=1), 60)
    path, _ = export_dataset_csv(sample, tmp_path / "factor")
    return path


def test_exit_code_mapping():
    assert exit_code_for(ContractViolation("x")) == 1
    for exc in (ConfigError("x"), InputError("x"), ShapeError("x"), NumericError("x")):
        assert exit_code_for(exc) == 2
    assert exit_code_for(FileNotFoundError("x")) == 3


def test_constant_response_fit_predict_eval(tmp_path, constant_csv, capsys):
    model = tmp_path / "model.json"
    assert main(["fit", "--data", str(constant_csv), "--response", "y", "--estimator", "lasso",
                 "--model", str(model)]) == 0
    assert json.loads(model.read_text(encoding="utf-8"))["format"] == "fastnn-model"

    out = tmp_path / "pred.csv"
    assert main(["predict", "--data", str(constant_csv), "--model", str(model), "--out", str(out)]) == 0
    pred = pd.read_csv(out)
    assert list(pred.columns) == ["x1", "x2", "y", "prediction"]
    np.testing.assert_allclose(pred["prediction"], 3.0, atol=1e-3)

    capsys.readouterr()
    assert main(["eval", "--data", str(constant_csv), "--model", str(model)]) == 0
    assert "r2_oos 0.000000" in capsys.readouterr().out


def test_fit_fast_nn_then_eval_on_held_out_rows(tmp_path, factor_csv, capsys):
    model = tmp_path / "fast.json"
    code = main(["fit", "--data", str(factor_csv), "--response", "y", "--estimator", "fast-nn",
                 "--model", str(model), "--rows", "0:40", "--epochs", "2"])
    assert code == 0
    assert main(["eval", "--data", str(factor_csv), "--model", str(model), "--rows", "40:60"]) == 0
    assert "r2_oos" in capsys.readouterr().out


def test_fit_reports_input_errors(tmp_path, capsys):
    bad = tmp_path / "bad.csv"
    bad.write_text("x1,y\n1,2\nnope,3\n", encoding="utf-8")
    code = main(["fit", "--data", str(bad), "--response", "y", "--estimator", "lasso",
                 "--model", str(tmp_path / "m.json")])
    assert code == 2
    assert "row 2" in capsys.readouterr().err


def test_missing_model_file_is_an_io_error(tmp_path, constant_csv):
    assert main(["eval", "--data", str(constant_csv), "--model", str(tmp_path / "absent.json")]) == 3


def test_predict_with_mismatched_columns(tmp_path, constant_csv):
    model = tmp_path / "model.json"
    main(["fit", "--data", str(constant_csv), "--response", "y", "--estimator", "pcr", "--model", str(model)])
    other = tmp_path / "other.csv"
    other.write_text("x1,z\n1,2\n", encoding="utf-8")
    assert main(["predict", "--data", str(other), "--model", str(model)]) == 2


def test_simulate_writes_run_directory(tmp_path):
    code = main(["simulate", "null-case", "--p", "10", "--trials", "2", "--epochs", "1", "--quiet",
                 "--output", str(tmp_path), "--run-name", "sim", "--xlsx"])
    assert code == 0
    paths = run_paths("sim", tmp_path)
    results = pd.read_csv(paths.results_csv)
    assert len(results) == 2 * 2
    assert set(results["estimator"]) == {"min-l2", "far-nn"}
    assert paths.timings_csv.exists() and paths.summary_xlsx.exists()
    summary = json.loads(paths.summary_json.read_text(encoding="utf-8"))
    assert summary["experiment"] == "null-case"
    meta = load_run_meta(paths)
    assert meta["status"] == "complete"
    assert all(stage["status"] == "success" for stage in meta["pipeline"].values())
    echo = run_config.load_resolved_config(paths.config_path)
    assert echo.plan.p_grid == (10,) and echo.plan.trials == 2 and echo.plan.train.epochs == 1


def test_simulate_rejects_unknown_config_key(tmp_path, capsys):
    cfg = tmp_path / "run.toml"
    cfg.write_text("config_version = 1\n[train]\nmomentum = 0.9\n", encoding="utf-8")
    assert main(["simulate", "exp1", "--config", str(cfg), "--output", str(tmp_path)]) == 2
    assert "train.momentum" in capsys.readouterr().err


def test_realdata_command(tmp_path, factor_csv):
    code = main(["realdata", "--dataset", str(factor_csv), "--response", "y", "--roster", "lasso,pcr",
                 "--repeats", "2", "--quiet", "--output", str(tmp_path), "--run-name", "real"])
    assert code == 0
    results = pd.read_csv(run_paths("real", tmp_path).results_csv)
    assert len(results) == 4 and set(results["metric"]) == {"r2_oos"}


def test_realdata_needs_a_dataset(tmp_path):
    assert main(["realdata", "--output", str(tmp_path)]) == 2


def test_netbuild_audit_default_grid_passes(tmp_path):
    assert main(["netbuild-audit", "--output", str(tmp_path), "--run-name", "audit"]) == 0
    frame = pd.read_csv(run_paths("audit", tmp_path).netbuild_audit_csv)
    assert len(frame) > 0 and frame["ok"].all()


def test_netbuild_audit_fault_exits_one(tmp_path, capsys):
    grid = tmp_path / "grid.toml"
    grid.write_text("[audit]\nmultiply = [[2, 2, 0.0, 1.0]]\n", encoding="utf-8")
    code = main(["netbuild-audit", "--grid", str(grid), "--inject-fault", "multiply-depth",
                 "--output", str(tmp_path), "--run-name", "fault"])
    assert code == 1
    out = capsys.readouterr().out
    assert "violation: multiply" in out
    frame = pd.read_csv(run_paths("fault", tmp_path).netbuild_audit_csv)
    assert f"{len(frame)} checks, {int((~frame['ok']).sum())} violations" in out
    assert load_run_meta(run_paths("fault", tmp_path))["status"] == "violations"


def test_netbuild_audit_empty_grid(tmp_path):
    grid = tmp_path / "empty.toml"
    grid.write_text("[audit]\n", encoding="utf-8")
    assert main(["netbuild-audit", "--grid", str(grid), "--output", str(tmp_path), "--run-name", "empty"]) == 0
    text = run_paths("empty", tmp_path).netbuild_audit_csv.read_text(encoding="utf-8")
    assert text.strip() == "construction,params,quantity,declared,measured,ok"


def test_netbuild_audit_unknown_section(tmp_path):
    grid = tmp_path / "bad.toml"
    grid.write_text("[audit]\ndivision = [1]\n", encoding="utf-8")
    assert main(["netbuild-audit", "--grid", str(grid), "--output", str(tmp_path)]) == 2


def test_dpm_command(tmp_path, factor_csv):
    code = main(["dpm", "--data", str(factor_csv), "--r-bar", "3", "--response", "y",
                 "--output", str(tmp_path), "--run-name", "dpm"])
    assert code == 0
    root = run_paths("dpm", tmp_path).root
    W = pd.read_csv(root / "W.csv", index_col="covariate")
    assert W.shape == (8, 3) and list(W.index) == [f"x{j}" for j in range(1, 9)]
    doc = json.loads((root / "dpm.json").read_text(encoding="utf-8"))
    assert doc["r_bar"] == 3 and doc["n1"] == 60 and len(doc["eigenvalues"]) == 3


def test_dpm_rank_too_large(tmp_path, factor_csv):
    assert main(["dpm", "--data", str(factor_csv), "--r-bar", "99", "--response", "y",
                 "--output", str(tmp_path)]) == 2


def test_runs_lists_and_shows_events(tmp_path, capsys):
    assert main(["netbuild-audit", "--output", str(tmp_path), "--run-name", "audit"]) == 0
    capsys.readouterr()
    assert main(["runs", "--output", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert "audit  netbuild-audit  complete" in out and "1 runs under" in out

    assert main(["runs", "--output", str(tmp_path), "--show", "audit", "--event", "stage_success"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert [line.split()[1:] for line in lines] == [["stage_success", "stage=audit"], ["stage_success", "stage=report"]]


def test_runs_show_unknown_run(tmp_path, capsys):
    assert main(["runs", "--output", str(tmp_path), "--show", "nope"]) == 2
    assert "no run 'nope'" in capsys.readouterr().err


def test_run_name_cannot_be_reused(tmp_path, capsys):
    assert main(["netbuild-audit", "--output", str(tmp_path), "--run-name", "again"]) == 0
    assert main(["netbuild-audit", "--output", str(tmp_path), "--run-name", "again"]) == 2
    assert "already exists" in capsys.readouterr().err
