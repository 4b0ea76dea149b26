"""Per-run event log, one JSON object per line of audit_log.jsonl.

Every event is stamped with the run id, the subcommand that created the run
and a hash of resolved_config.toml, so lines copied out of a run directory
still say which run and which plan produced them.
"""

from __future__ import annotations

import hashlib
from datetime import datetime, timezone
from typing import List, Optional

from . import io_utils
from .paths import RunPaths


def config_hash(paths: RunPaths) -> Optional[str]:
    """sha256 prefix of the resolved config; None until the config is written."""
    if not paths.config_path.exists():
        return None
    return hashlib.sha256(paths.config_path.read_bytes()).hexdigest()[:16]


def _run_command(paths: RunPaths) -> Optional[str]:
    meta = io_utils.read_json(paths.run_meta_path, default={}) or {}
    return meta.get("command")


def append_event(paths: RunPaths, entry: dict) -> None:
    item = {"run_id": paths.root.name, "command": _run_command(paths), "config_hash": config_hash(paths)}
    item.update(entry)
    item.setdefault("ts", datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"))
    io_utils.append_jsonl(paths.audit_log_path, item)


def read_events(paths: RunPaths, event: Optional[str] = None) -> List[dict]:
    """Logged events in order, optionally only those of one kind."""
    items = io_utils.read_jsonl(paths.audit_log_path)
    if event is None:
        return items
    return [item for item in items if item.get("event") == event]
