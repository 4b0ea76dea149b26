from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional


APP_ROOT = Path(__file__).resolve().parents[1]
REPO_ROOT = APP_ROOT.parent
OUTPUT_ENV = "FASTNN_OUTPUT_DIR"
DEFAULT_OUTPUT_ROOT = Path("runs")


def output_root(override: Optional[str] = None) -> Path:
    """--output flag, then $FASTNN_OUTPUT_DIR, then ./runs."""
    if override:
        return Path(override)
    env = os.environ.get(OUTPUT_ENV)
    return Path(env) if env else DEFAULT_OUTPUT_ROOT


@dataclass(frozen=True)
class RunPaths:
    root: Path
    run_meta_path: Path
    config_path: Path
    audit_log_path: Path

    @property
    def results_csv(self) -> Path:
        return self.root / "results.csv"

    @property
    def summary_json(self) -> Path:
        return self.root / "summary.json"

    @property
    def timings_csv(self) -> Path:
        return self.root / "timings.csv"

    @property
    def summary_xlsx(self) -> Path:
        return self.root / "summary.xlsx"

    @property
    def netbuild_audit_csv(self) -> Path:
        return self.root / "netbuild_audit.csv"

    def heat_csv(self, p: int, variant: str = "") -> Path:
        suffix = f"_{variant.replace('=', '')}" if variant else ""
        return self.root / f"theta_heat_p{p}{suffix}.csv"


def run_paths(run_id: str, root: Optional[Path] = None) -> RunPaths:
    base = (root if root is not None else output_root()) / run_id
    return RunPaths(
        root=base,
        run_meta_path=base / "run_meta.json",
        config_path=base / "resolved_config.toml",
        audit_log_path=base / "audit_log.jsonl",
    )
