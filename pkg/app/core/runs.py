from __future__ import annotations

from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator, List, Optional, Sequence
from uuid import uuid4

from fastnn.errors import ConfigError

from . import io_utils
from .audit import append_event
from .paths import RunPaths, output_root, run_paths


COMMAND_STAGES = {
    "simulate": ("simulate", "report"),
    "realdata": ("load", "simulate", "report"),
    "netbuild-audit": ("audit", "report"),
    "dpm": ("load", "estimate", "report"),
}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")


def new_run(
    command: str,
    root: Optional[Path] = None,
    run_name: Optional[str] = None,
    stages: Optional[Sequence[str]] = None,
) -> RunPaths:
    root = root if root is not None else output_root()
    if run_name and run_exists(run_name, root):
        raise ConfigError(f"run {run_name!r} already exists under {root}")
    rid = run_name or f"{command}-{uuid4().hex[:8]}"
    paths = run_paths(rid, root)
    paths.root.mkdir(parents=True, exist_ok=True)
    stages = stages if stages is not None else COMMAND_STAGES.get(command, ())
    meta = {
        "id": rid,
        "command": command,
        "created_at": _now(),
        "status": "created",
        "pipeline": {stage: {"status": "pending", "message": None} for stage in stages},
        "last_error": None,
    }
    io_utils.write_json(paths.run_meta_path, meta)
    append_event(paths, {"event": "run_created", "command": command, "run_id": rid})
    return paths


def load_run_meta(paths: RunPaths) -> dict:
    return io_utils.read_json(paths.run_meta_path, default={}) or {}


def save_run_meta(paths: RunPaths, meta: dict) -> None:
    io_utils.write_json(paths.run_meta_path, meta)


def update_stage_status(paths: RunPaths, stage: str, status: str, message: Optional[str] = None) -> dict:
    meta = load_run_meta(paths)
    meta.setdefault("pipeline", {})
    meta["pipeline"][stage] = {"status": status, "message": message}
    if status == "running":
        meta["status"] = "running"
    elif status == "error":
        meta["status"] = "error"
        meta["last_error"] = f"{stage}_failed"
    save_run_meta(paths, meta)
    append_event(paths, {"event": f"stage_{status}", "stage": stage, "message": message})
    return meta


def finish_run(paths: RunPaths, status: str = "complete", error: Optional[str] = None) -> dict:
    meta = load_run_meta(paths)
    meta["status"] = status
    if error is not None:
        meta["last_error"] = error
    meta["finished_at"] = _now()
    save_run_meta(paths, meta)
    append_event(paths, {"event": "run_finished", "status": status, "error": error})
    return meta


def list_runs(root: Optional[Path] = None) -> List[dict]:
    root = root if root is not None else output_root()
    if not root.exists():
        return []
    items: List[dict] = []
    for child in root.iterdir():
        if not child.is_dir():
            continue
        meta = io_utils.read_json(child / "run_meta.json", default={}) or {}
        if meta:
            items.append(meta)
    items.sort(key=lambda x: x.get("created_at") or "", reverse=True)
    return items


def run_exists(run_id: str, root: Optional[Path] = None) -> bool:
    return run_paths(run_id, root).root.exists()


@contextmanager
def stage(paths: RunPaths, name: str) -> Iterator[None]:
    """Mark a pipeline stage running, then success or error; errors propagate."""
    update_stage_status(paths, name, "running")
    try:
        yield
    except Exception as exc:
        update_stage_status(paths, name, "error", str(exc))
        finish_run(paths, "error", f"{name}_failed")
        raise
    update_stage_status(paths, name, "success")
