"""
TOML run configuration.

Layering: built-in defaults < preset (desk or full scale) < TOML file < command-line
flags. Every run writes the resolved result back out as resolved_config.toml, which
loads to the same plan.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any, Dict, Optional

import tomli_w

from fastnn.bench.plans import ExperimentPlan, desk_plan, full_plan
from fastnn.errors import ConfigError
from fastnn.estimators.neural import ArchConfig
from fastnn.estimators.penalties import ClippedL1Config
from fastnn.nets.optim import TrainConfig

CONFIG_VERSION = 1

# [penalty] keys that live on the plan rather than on ClippedL1Config
PLAN_PENALTY_KEYS = ("n_sel", "fanam_lam")
ARCH_KEYS = tuple(f.name for f in fields(ArchConfig))
TRAIN_KEYS = tuple(f.name for f in fields(TrainConfig) if f.name != "seed")
PENALTY_KEYS = ("lam", "tau") + PLAN_PENALTY_KEYS
PLAN_KEYS = tuple(
    f.name for f in fields(ExperimentPlan) if f.name not in ("arch", "train", "penalty") + PLAN_PENALTY_KEYS
)
DATA_KEYS = ("path", "response")
OUTPUT_KEYS = ("dir",)

SECTIONS: Dict[str, tuple] = {
    "plan": PLAN_KEYS,
    "arch": ARCH_KEYS,
    "train": TRAIN_KEYS,
    "penalty": PENALTY_KEYS,
    "data": DATA_KEYS,
    "output": OUTPUT_KEYS,
}


@dataclass
class RunConfig:
    plan: ExperimentPlan
    output_dir: Optional[str] = None
    data: Dict[str, Any] = field(default_factory=dict)


def read_toml(path: Path) -> dict:
    try:
        with Path(path).open("rb") as handle:
            return tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: invalid TOML: {exc}") from exc


def check_keys(doc: dict) -> None:
    if "config_version" not in doc:
        raise ConfigError("missing required key 'config_version'")
    if doc["config_version"] != CONFIG_VERSION:
        raise ConfigError(f"unsupported config_version {doc['config_version']!r}; expected {CONFIG_VERSION}")
    for key, value in doc.items():
        if key == "config_version":
            continue
        if key not in SECTIONS or not isinstance(value, dict):
            raise ConfigError(f"unknown config key '{key}'")
        for sub in value:
            if sub not in SECTIONS[key]:
                raise ConfigError(f"unknown config key '{key}.{sub}'")


def _rebuild(base, values: dict, section: str):
    try:
        return replace(base, **values) if values else base
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid [{section}] values: {exc}") from exc


def apply_sections(plan: ExperimentPlan, doc: dict) -> ExperimentPlan:
    """Layer the plan/arch/train/penalty sections of a checked document over a plan."""
    plan_values = dict(doc.get("plan", {}))
    if plan_values.get("experiment", plan.experiment) != plan.experiment:
        raise ConfigError(
            f"config is for experiment {plan_values['experiment']!r} but {plan.experiment!r} was requested"
        )
    penalty = dict(doc.get("penalty", {}))
    for key in PLAN_PENALTY_KEYS:
        if key in penalty:
            plan_values[key] = penalty.pop(key)
    arch = _rebuild(plan.arch, doc.get("arch", {}), "arch")
    train = _rebuild(plan.train, doc.get("train", {}), "train")
    pen = _rebuild(plan.penalty, penalty, "penalty")
    plan_values.update(arch=arch, train=train, penalty=pen)
    return _rebuild(plan, plan_values, "plan")


def preset(experiment: str, full_scale: bool = False) -> ExperimentPlan:
    return full_plan(experiment) if full_scale else desk_plan(experiment)


def load_run_config(experiment: str, path: Optional[Path] = None, full_scale: bool = False) -> RunConfig:
    plan = preset(experiment, full_scale)
    if path is None:
        return RunConfig(plan)
    doc = read_toml(path)
    check_keys(doc)
    return RunConfig(
        plan=apply_sections(plan, doc),
        output_dir=doc.get("output", {}).get("dir"),
        data=dict(doc.get("data", {})),
    )


def apply_overrides(plan: ExperimentPlan, **overrides) -> ExperimentPlan:
    """Command-line flags; None means 'not given'."""
    values = {k: v for k, v in overrides.items() if v is not None}
    return _rebuild(plan, values, "plan") if values else plan


# ---------------------------------------------------------------------------
# Resolved-config echo
# ---------------------------------------------------------------------------


def _toml_value(value):
    if isinstance(value, tuple):
        return [_toml_value(v) for v in value]
    return value


def _section(values: dict, keys: tuple) -> dict:
    return {k: _toml_value(values[k]) for k in keys if k in values and values[k] is not None}


def resolved_document(config: RunConfig) -> dict:
    plan = config.plan
    plan_dict = {f.name: getattr(plan, f.name) for f in fields(ExperimentPlan)}
    penalty = dict(plan.penalty.to_dict())
    penalty.update({k: plan_dict[k] for k in PLAN_PENALTY_KEYS})
    doc: Dict[str, Any] = {
        "config_version": CONFIG_VERSION,
        "plan": _section(plan_dict, PLAN_KEYS),
        "arch": _section(plan.arch.to_dict(), ARCH_KEYS),
        "train": _section(plan.train.to_dict(), TRAIN_KEYS),
        "penalty": _section(penalty, PENALTY_KEYS),
    }
    if config.data:
        doc["data"] = _section(config.data, DATA_KEYS)
    if config.output_dir:
        doc["output"] = {"dir": str(config.output_dir)}
    return doc


def write_resolved_config(path: Path, config: RunConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(tomli_w.dumps(resolved_document(config)), encoding="utf-8")


def load_resolved_config(path: Path, full_scale: bool = False) -> RunConfig:
    """Reload an echo file; the experiment comes from its [plan] section."""
    doc = read_toml(path)
    check_keys(doc)
    experiment = doc.get("plan", {}).get("experiment")
    if experiment is None:
        raise ConfigError("missing required key 'plan.experiment'")
    return load_run_config(experiment, path, full_scale)
