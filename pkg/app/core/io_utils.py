from __future__ import annotations

import json
import logging
import math
from pathlib import Path
from typing import Any, List

import numpy as np

logger = logging.getLogger(__name__)


def json_safe(obj: Any) -> Any:
    """Plain JSON values only: numpy scalars and arrays unwrapped, NaN and inf become None."""
    if isinstance(obj, np.ndarray):
        return json_safe(obj.tolist())
    if isinstance(obj, np.generic):
        return json_safe(obj.item())
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {str(k): json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [json_safe(v) for v in obj]
    if isinstance(obj, Path):
        return str(obj)
    return obj


def read_json(path: Path, default: Any | None = None) -> Any:
    """Run metadata reader: a missing or unreadable file gives `default`."""
    if not path.exists():
        return default
    try:
        return json.loads(path.read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        logger.warning("ignoring unreadable %s: %s", path, exc)
        return default


def load_json(path: Path) -> Any:
    """Like read_json but a missing or malformed file is an error."""
    return json.loads(path.read_text(encoding="utf-8"))


def write_json(path: Path, obj: Any, sort_keys: bool = False) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(json_safe(obj), indent=2, ensure_ascii=False, allow_nan=False, sort_keys=sort_keys)
    path.write_text(text + "\n", encoding="utf-8")


def read_jsonl(path: Path) -> List[dict]:
    if not path.exists():
        return []
    items: List[dict] = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line:
            continue
        try:
            items.append(json.loads(line))
        except json.JSONDecodeError:
            logger.warning("%s:%d is not valid JSON, skipped", path, lineno)
    return items


def append_jsonl(path: Path, item: dict) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("a", encoding="utf-8") as handle:
        handle.write(json.dumps(json_safe(item), ensure_ascii=False, allow_nan=False))
        handle.write("\n")
