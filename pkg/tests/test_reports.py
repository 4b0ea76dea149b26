import json
import math

import numpy as np
import pandas as pd
from openpyxl import load_workbook

from app.core import reports
from fastnn.bench import TrialRecord
from fastnn.netbuild.audit import AuditRow


def _records():
    return [
        TrialRecord("exp1", "far-nn", 100, "", 0, 11, "mse", 0.2, wall_time=1.5),
        TrialRecord("exp1", "far-nn", 100, "", 1, 12, "mse", 0.4, wall_time=1.7),
        TrialRecord("exp1", "vanilla", 100, "", 0, 11, "mse", math.nan, status="failed", message="NumericError: x"),
    ]


def test_results_and_timings_are_split(tmp_path):
    reports.write_results_csv(tmp_path / "results.csv", _records())
    reports.write_timings_csv(tmp_path / "timings.csv", _records())
    results = pd.read_csv(tmp_path / "results.csv")
    timings = pd.read_csv(tmp_path / "timings.csv")
    assert "wall_time" not in results.columns
    assert list(timings.columns) == ["estimator", "p", "variant", "trial", "wall_time"]
    assert timings["wall_time"].tolist() == [1.5, 1.7, 0.0]


def test_summary_json_has_schema_and_null_for_missing(tmp_path):
    path = tmp_path / "summary.json"
    summary = reports.write_summary_json(path, "exp1", _records())
    doc = json.loads(path.read_text(encoding="utf-8"))
    assert doc["schema_version"] == 1 and doc["experiment"] == "exp1"
    rows = {row["estimator"]: row for row in doc["rows"]}
    assert abs(rows["far-nn"]["mean"] - 0.3) < 1e-12
    assert rows["vanilla"]["mean"] is None and rows["vanilla"]["failed"] == 1
    assert len(summary) == 2


def test_heat_csv_writes_empty_cells_for_zeros(tmp_path):
    frame = pd.DataFrame({"column": [1], "x1": [np.nan], "x2": [-2.0]})
    path = tmp_path / "heat.csv"
    reports.write_heat_csv(path, frame)
    assert path.read_text(encoding="utf-8").splitlines()[1] == "1,,-2.0"


def test_audit_csv_columns(tmp_path):
    path = tmp_path / "audit.csv"
    reports.write_audit_csv(path, [AuditRow("mid", "-", "depth", 2, 2, True)])
    frame = pd.read_csv(path)
    assert list(frame.columns) == ["construction", "params", "quantity", "declared", "measured", "ok"]
    reports.write_audit_csv(path, [])
    assert path.read_text(encoding="utf-8").strip() == "construction,params,quantity,declared,measured,ok"


def test_summary_workbook_appends_rows(tmp_path):
    path = tmp_path / "summary.xlsx"
    summary = pd.DataFrame({"estimator": ["far-nn"], "mean": [0.3]})
    reports.write_summary_xlsx(path, "exp1", summary)
    last = reports.write_summary_xlsx(path, "exp1", summary)
    assert last == 3
    wb = load_workbook(path)
    assert wb.sheetnames == ["exp1"]
    ws = wb["exp1"]
    assert [c.value for c in ws[1]] == ["estimator", "mean"]
    assert ws.cell(row=3, column=1).value == "far-nn"
    reports.write_summary_xlsx(path, "exp2", summary)
    assert load_workbook(path).sheetnames == ["exp1", "exp2"]
