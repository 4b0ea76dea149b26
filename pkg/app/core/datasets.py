"""
Headered numeric CSV ingestion with located errors, and row-range splits.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from fastnn.errors import ConfigError, InputError, ShapeError
from fastnn.factor.dgp import FactorSample

logger = logging.getLogger(__name__)


@dataclass
class DatasetFile:
    path: Path
    response: Optional[str]
    covariates: List[str] = field(default_factory=list)
    standardize: bool = True

    @property
    def p(self) -> int:
        return len(self.covariates)


def _read_table(path: Path) -> Tuple[List[str], pd.DataFrame]:
    try:
        raw = pd.read_csv(path, header=None, dtype=str, keep_default_na=False, skipinitialspace=True)
    except pd.errors.EmptyDataError as exc:
        raise InputError(f"{path}: file is empty") from exc
    except pd.errors.ParserError as exc:
        raise InputError(f"{path}: cannot parse CSV: {exc}") from exc
    header = [str(h).strip() for h in raw.iloc[0]]
    return header, raw.iloc[1:].reset_index(drop=True)


def _numeric_column(values: pd.Series, name: str) -> np.ndarray:
    parsed = pd.to_numeric(values.str.strip(), errors="coerce").to_numpy(dtype=float)
    bad = ~np.isfinite(parsed)
    if bad.any():
        row = int(np.argmax(bad))
        raise InputError(f"cell {values.iloc[row]!r} is not a finite number", row=row + 1, column=name)
    return parsed


def load_dataset(
    path: Path,
    response: Optional[str],
    covariates: Optional[Sequence[str]] = None,
    standardize: bool = True,
) -> Tuple[FactorSample, DatasetFile]:
    """Parse every cell as a finite real. Rows are numbered from 1 below the header.

    Without covariates every non-response column is a covariate. A missing response
    (response=None) gives y filled with NaN, for prediction.
    """
    path = Path(path)
    header, body = _read_table(path)
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise InputError(f"{path}: duplicate column names {dupes}")
    if response is not None and response not in header:
        raise InputError(f"{path}: response column {response!r} not found")
    if covariates is None:
        covariates = [h for h in header if h != response]
    missing = [c for c in covariates if c not in header]
    if missing:
        raise ShapeError(f"{path}: covariate columns {missing} not found")
    if not covariates:
        raise ShapeError(f"{path}: no covariate columns")
    if body.empty:
        raise InputError(f"{path}: no data rows")

    columns = {name: body[header.index(name)] for name in header}
    x = np.column_stack([_numeric_column(columns[c], c) for c in covariates])
    if response is not None:
        y = _numeric_column(columns[response], response)
    else:
        y = np.full(x.shape[0], np.nan)
    logger.info("loaded %s: %d rows, %d covariates", path, x.shape[0], x.shape[1])
    return FactorSample(x=x, y=y), DatasetFile(path, response, list(covariates), standardize)


def parse_rows(spec: Optional[str], n: int) -> np.ndarray:
    """'start:stop' over data rows (zero-based, stop exclusive; either end may be empty)."""
    if spec is None:
        return np.arange(n)
    try:
        start_text, stop_text = spec.split(":")
        start = int(start_text) if start_text.strip() else 0
        stop = int(stop_text) if stop_text.strip() else n
    except ValueError as exc:
        raise ConfigError(f"row range must look like 'start:stop', got {spec!r}") from exc
    if not 0 <= start < stop <= n:
        raise ConfigError(f"row range {spec!r} is outside 0..{n} or empty")
    return np.arange(start, stop)


def inner_split(idx: np.ndarray, fraction: float, seed: int) -> Tuple[np.ndarray, np.ndarray]:
    """Random train/valid partition of the given rows; each part keeps row order."""
    if not 0.0 < fraction < 1.0:
        raise ConfigError(f"inner split must lie in (0, 1), got {fraction}")
    order = np.random.default_rng(seed).permutation(len(idx))
    n_train = int(round(fraction * len(idx)))
    if n_train < 1 or n_train >= len(idx):
        raise ShapeError(f"inner split {fraction} of {len(idx)} rows leaves an empty part")
    return np.sort(idx[order[:n_train]]), np.sort(idx[order[n_train:]])
