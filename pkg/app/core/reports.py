"""
Result files for a run directory: results.csv, timings.csv, summary.json, heat-data
CSVs, the netbuild audit CSV and an optional summary.xlsx workbook.

Only timings.csv carries wall-clock values.
"""

from __future__ import annotations

from pathlib import Path
from typing import Any, Dict, List, Sequence

import pandas as pd
from openpyxl import Workbook, load_workbook

from fastnn.bench.runner import RESULTS_SCHEMA_VERSION, TrialRecord, records_frame, summarize
from fastnn.netbuild.audit import AuditRow

from . import io_utils


def write_results_csv(path: Path, records: Sequence[TrialRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    records_frame(records).to_csv(path, index=False)


def write_timings_csv(path: Path, records: Sequence[TrialRecord]) -> None:
    frame = pd.DataFrame(
        [
            {"estimator": r.estimator, "p": r.p, "variant": r.variant, "trial": r.trial, "wall_time": r.wall_time}
            for r in records
        ],
        columns=["estimator", "p", "variant", "trial", "wall_time"],
    )
    frame.to_csv(path, index=False)


def summary_document(experiment: str, summary: pd.DataFrame) -> dict:
    return {
        "schema_version": RESULTS_SCHEMA_VERSION,
        "experiment": experiment,
        "rows": io_utils.json_safe(summary.to_dict(orient="records")),
    }


def write_summary_json(path: Path, experiment: str, records: Sequence[TrialRecord]) -> pd.DataFrame:
    summary = summarize(records)
    io_utils.write_json(path, summary_document(experiment, summary))
    return summary


def write_heat_csv(path: Path, frame: pd.DataFrame) -> None:
    frame.to_csv(path, index=False, na_rep="")


def write_audit_csv(path: Path, rows: Sequence[AuditRow]) -> None:
    columns = ["construction", "params", "quantity", "declared", "measured", "ok"]
    pd.DataFrame([row.to_dict() for row in rows], columns=columns).to_csv(path, index=False)


# ---------------------------------------------------------------------------
# Workbook
# ---------------------------------------------------------------------------


def ensure_workbook(path: Path) -> Workbook:
    if path.exists():
        return load_workbook(path)
    return Workbook()


def ensure_sheet(wb: Workbook, sheet_name: str):
    if sheet_name in wb.sheetnames:
        return wb[sheet_name]
    # a fresh workbook carries one empty "Sheet"; reuse it
    if wb.sheetnames == ["Sheet"] and wb["Sheet"].max_row == 1 and wb["Sheet"].max_column == 1:
        ws = wb["Sheet"]
        ws.title = sheet_name
        return ws
    return wb.create_sheet(sheet_name)


def ensure_headers(ws, headers: List[str]) -> None:
    if ws.max_row == 1 and all(ws.cell(row=1, column=i + 1).value is None for i in range(len(headers))):
        for i, h in enumerate(headers, 1):
            ws.cell(row=1, column=i).value = h


def append_row(ws, headers: List[str], row: Dict[str, Any]) -> int:
    next_row = ws.max_row + 1
    for i, h in enumerate(headers, 1):
        ws.cell(row=next_row, column=i).value = row.get(h, None)
    return next_row


def write_summary_xlsx(path: Path, experiment: str, summary: pd.DataFrame) -> int:
    """Append the summary rows to the experiment's sheet; returns the last row written."""
    wb = ensure_workbook(path)
    ws = ensure_sheet(wb, experiment[:31])
    headers = list(summary.columns)
    ensure_headers(ws, headers)
    last = ws.max_row
    for row in io_utils.json_safe(summary.to_dict(orient="records")):
        last = append_row(ws, headers, row)
    wb.active = ws
    path.parent.mkdir(parents=True, exist_ok=True)
    wb.save(path)
    return last
