"""YAML experiment configs and run manifests.

A config file has four sections (``experiment``, ``environment``, ``policy``,
``time``). Unknown sections or keys are rejected so that every stored run
can be traced to a fully known configuration. ``configs/defaults.yaml``
lists every key with its default.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple

import yaml

from engine.trial_runner import ExperimentConfig
from picking_core.environment import EnvConfig, EnvironmentKind, ProbabilisticConfig
from picking_core.errors import ConfigError
from picking_core.model import TimeModel
from picking_core.policies import PolicyConfig, PolicyKind, parse_policy_kind

ALL_POLICIES: Tuple[PolicyKind, ...] = tuple(PolicyKind)

_FLOAT = "float"
_INT = "int"
_TEXT = "text"
_OPTIONAL_FLOAT = "optional float"
_NAMES = "list of names"

SCHEMA: Dict[str, Dict[str, str]] = {
    "experiment": {
        "master_seed": _INT,
        "n_trials": _INT,
        "consecutive_failure_limit": _INT,
        "policies": _NAMES,
    },
    "environment": {
        "kind": _TEXT,
        "n_objects": _INT,
        "n_grippers": _INT,
        "placement_block_fraction": _FLOAT,
        "bin_width": _FLOAT,
        "bin_height": _FLOAT,
        "radius_min": _FLOAT,
        "radius_max": _FLOAT,
        "boundary_sites": _INT,
        "success_prob_low": _FLOAT,
        "success_prob_high": _FLOAT,
        "max_placement_attempts": _INT,
    },
    "policy": {
        "circle_radius": _FLOAT,
        "swap_min_radius": _OPTIONAL_FLOAT,
        "swap_search_radius": _OPTIONAL_FLOAT,
    },
    "time": {
        "t_plan_s": _FLOAT,
        "t_exec_s": _FLOAT,
        "mode": _TEXT,
        "t_pick_s": _FLOAT,
    },
}

SWEEPABLE: Dict[str, Tuple[str, str]] = {
    "circle_radius": ("policy", "circle_radius"),
    "swap_min_radius": ("policy", "swap_min_radius"),
    "swap_search_radius": ("policy", "swap_search_radius"),
    "placement_block_fraction": ("environment", "placement_block_fraction"),
}


@dataclass(frozen=True)
class ExperimentPlan:
    """A base experiment plus the policies to run it with."""

    base: ExperimentConfig = field(default_factory=ExperimentConfig)
    policies: Tuple[PolicyKind, ...] = ALL_POLICIES

    def __post_init__(self) -> None:
        if not self.policies:
            raise ConfigError("experiment.policies", "at least one policy is required")

    def experiments(self) -> List[ExperimentConfig]:
        return [replace(self.base, policy=replace(self.base.policy, kind=kind)) for kind in self.policies]

    def with_overrides(self, seed: Optional[int] = None, trials: Optional[int] = None) -> "ExperimentPlan":
        base = self.base
        if seed is not None:
            base = replace(base, master_seed=seed)
        if trials is not None:
            base = replace(base, n_trials=trials)
        return replace(self, base=base)


def _coerce(key: str, value: Any, kind: str) -> Any:
    if kind == _OPTIONAL_FLOAT and value is None:
        return None
    if kind in (_FLOAT, _OPTIONAL_FLOAT):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(key, f"expected a number, got {value!r}")
        return float(value)
    if kind == _INT:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(key, f"expected an integer, got {value!r}")
        return value
    if kind == _NAMES:
        if isinstance(value, str):
            value = [value]
        if not isinstance(value, list) or not all(isinstance(item, str) for item in value):
            raise ConfigError(key, f"expected a list of names, got {value!r}")
        return value
    if not isinstance(value, str):
        raise ConfigError(key, f"expected text, got {value!r}")
    return value


def _sections(data: Any) -> Dict[str, Dict[str, Any]]:
    if data is None:
        data = {}
    if not isinstance(data, Mapping):
        raise ConfigError("<root>", "a config file must be a mapping of sections")
    sections: Dict[str, Dict[str, Any]] = {}
    for name, body in data.items():
        if name not in SCHEMA:
            raise ConfigError(str(name), f"unknown section (expected one of: {', '.join(SCHEMA)})")
        if body is None:
            body = {}
        if not isinstance(body, Mapping):
            raise ConfigError(str(name), "a section must be a mapping of keys")
        values = {}
        for key, value in body.items():
            dotted = f"{name}.{key}"
            if key not in SCHEMA[name]:
                raise ConfigError(dotted, "unknown key")
            values[key] = _coerce(dotted, value, SCHEMA[name][key])
        sections[name] = values
    return sections


def parse_plan(data: Any) -> ExperimentPlan:
    sections = _sections(data)
    exp = sections.get("experiment", {})
    env = sections.get("environment", {})
    pol = sections.get("policy", {})
    tim = sections.get("time", {})

    env_defaults = EnvConfig()
    kind_name = env.get("kind", env_defaults.kind.value)
    try:
        kind = EnvironmentKind(kind_name)
    except ValueError:
        known = ", ".join(item.value for item in EnvironmentKind)
        raise ConfigError("environment.kind", f"unknown environment {kind_name!r} (expected one of: {known})") from None
    prob_defaults = env_defaults.success_prob
    env_config = EnvConfig(
        kind=kind,
        n_objects=env.get("n_objects", env_defaults.n_objects),
        n_grippers=env.get("n_grippers", env_defaults.n_grippers),
        placement_block_fraction=env.get("placement_block_fraction", env_defaults.placement_block_fraction),
        bin_dims=(env.get("bin_width", env_defaults.bin_dims[0]), env.get("bin_height", env_defaults.bin_dims[1])),
        radius_range=(
            env.get("radius_min", env_defaults.radius_range[0]),
            env.get("radius_max", env_defaults.radius_range[1]),
        ),
        boundary_sites=env.get("boundary_sites", env_defaults.boundary_sites),
        success_prob=ProbabilisticConfig(
            low=env.get("success_prob_low", prob_defaults.low),
            high=env.get("success_prob_high", prob_defaults.high),
        ),
        max_placement_attempts=env.get("max_placement_attempts", env_defaults.max_placement_attempts),
    )

    policy_defaults = PolicyConfig()
    policy_config = PolicyConfig(
        circle_radius=pol.get("circle_radius", policy_defaults.circle_radius),
        swap_min_radius=pol.get("swap_min_radius", policy_defaults.swap_min_radius),
        swap_search_radius=pol.get("swap_search_radius", policy_defaults.swap_search_radius),
    )

    time_defaults = TimeModel()
    time_model = TimeModel(
        t_plan_s=tim.get("t_plan_s", time_defaults.t_plan_s),
        t_exec_s=tim.get("t_exec_s", time_defaults.t_exec_s),
        mode=tim.get("mode", time_defaults.mode),
        t_pick_s=tim.get("t_pick_s", time_defaults.t_pick_s),
    )

    exp_defaults = ExperimentConfig()
    names = exp.get("policies", [kind.value for kind in ALL_POLICIES])
    policies = tuple(parse_policy_kind(name) for name in names)
    if len(set(policies)) != len(policies):
        raise ConfigError("experiment.policies", "a policy is listed twice")
    base = ExperimentConfig(
        env=env_config,
        policy=replace(policy_config, kind=policies[0]) if policies else policy_config,
        n_trials=exp.get("n_trials", exp_defaults.n_trials),
        time=time_model,
        consecutive_failure_limit=exp.get("consecutive_failure_limit", exp_defaults.consecutive_failure_limit),
        master_seed=exp.get("master_seed", exp_defaults.master_seed),
    )
    return ExperimentPlan(base=base, policies=policies)


def load_plan(path: Path) -> ExperimentPlan:
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError("<file>", f"{path} is not valid YAML: {exc}") from exc
    return parse_plan(data)


def env_to_dict(env: EnvConfig) -> Dict[str, Any]:
    return {
        "kind": env.kind.value,
        "n_objects": env.n_objects,
        "n_grippers": env.n_grippers,
        "placement_block_fraction": env.placement_block_fraction,
        "bin_width": env.bin_dims[0],
        "bin_height": env.bin_dims[1],
        "radius_min": env.radius_range[0],
        "radius_max": env.radius_range[1],
        "boundary_sites": env.boundary_sites,
        "success_prob_low": env.success_prob.low,
        "success_prob_high": env.success_prob.high,
        "max_placement_attempts": env.max_placement_attempts,
    }


def policy_to_dict(policy: PolicyConfig) -> Dict[str, Any]:
    resolved = policy.resolved()
    return {
        "circle_radius": resolved.circle_radius,
        "swap_min_radius": resolved.swap_min_radius,
        "swap_search_radius": resolved.swap_search_radius,
    }


def time_to_dict(time_model: TimeModel) -> Dict[str, Any]:
    return {
        "t_plan_s": time_model.t_plan_s,
        "t_exec_s": time_model.t_exec_s,
        "mode": time_model.mode,
        "t_pick_s": time_model.t_pick_s,
    }


def plan_to_dict(plan: ExperimentPlan) -> Dict[str, Any]:
    """Resolved config with every default expanded; :func:`parse_plan` reads it back."""
    base = plan.base
    return {
        "experiment": {
            "master_seed": base.master_seed,
            "n_trials": base.n_trials,
            "consecutive_failure_limit": base.consecutive_failure_limit,
            "policies": [kind.value for kind in plan.policies],
        },
        "environment": env_to_dict(base.env),
        "policy": policy_to_dict(base.policy),
        "time": time_to_dict(base.time),
    }


def dump_plan(plan: ExperimentPlan) -> str:
    return yaml.safe_dump(plan_to_dict(plan), sort_keys=False)


def experiment_echo(config: ExperimentConfig) -> Dict[str, Any]:
    """Provenance block stored with every trial record."""
    return {
        "environment": env_to_dict(config.env),
        "policy": {"kind": config.policy.kind.value, **policy_to_dict(config.policy)},
        "time": time_to_dict(config.time),
        "consecutive_failure_limit": config.consecutive_failure_limit,
    }


def time_from_echo(echo: Mapping[str, Any]) -> TimeModel:
    section = _sections({"time": echo.get("time", {})})["time"]
    return TimeModel(**section)


def _timestamp() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc) if epoch else datetime.now(timezone.utc)
    return moment.replace(microsecond=0).isoformat()


@dataclass(frozen=True)
class RunManifest:
    config: Dict[str, Any]
    version: str
    timestamp: str
    master_seed: int
    command: str = "run"
    extras: Dict[str, Any] = field(default_factory=dict)

    @classmethod
    def build(cls, plan: ExperimentPlan, version: str, command: str = "run", **extras: Any) -> "RunManifest":
        return cls(
            config=plan_to_dict(plan),
            version=version,
            timestamp=_timestamp(),
            master_seed=plan.base.master_seed,
            command=command,
            extras=dict(extras),
        )

    def plan(self) -> ExperimentPlan:
        return parse_plan(self.config)

    def to_yaml(self) -> str:
        payload = {
            "version": self.version,
            "timestamp": self.timestamp,
            "command": self.command,
            "master_seed": self.master_seed,
            "extras": self.extras,
            "config": self.config,
        }
        return yaml.safe_dump(payload, sort_keys=False)

    @classmethod
    def from_yaml(cls, text: str) -> "RunManifest":
        data = yaml.safe_load(text)
        if not isinstance(data, Mapping) or "config" not in data:
            raise ConfigError("<manifest>", "not a run manifest")
        return cls(
            config=dict(data["config"]),
            version=str(data.get("version", "")),
            timestamp=str(data.get("timestamp", "")),
            master_seed=int(data.get("master_seed", 0)),
            command=str(data.get("command", "run")),
            extras=dict(data.get("extras") or {}),
        )
