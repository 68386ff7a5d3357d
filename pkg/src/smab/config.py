"""YAML experiment configuration: parsing, overrides and canonical echo.

A config looks like::

    seed: 2024
    runs: 1000
    horizon: 500
    initial_budget: 0.5
    alpha: 10          # default for every policy
    paths: 100         # default for ruin-averse policies
    environment:
      arm_count: 8
      mean_low: -0.01
      mean_high: 0.01
      sigma_shape: 1.0
      sigma_rate: 10.0
    policies:
      - kind: UCB
      - kind: RuinAverse
        lambda: [0, 1, 10, 100, 1000]

``environment`` may instead list fixed arms (``arms: [{mean: .., std_dev: ..}]``).
A list-valued ``lambda`` expands into one policy per value.
"""

from __future__ import annotations

from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable, Mapping, Optional

import yaml

from smab.core import ArmSpec, ConfigurationError, Environment, EnvironmentSpec
from smab.harness import ExperimentConfig
from smab.policies import PolicyConfig, PolicyKind

SMOKE_PRESET = {"runs": 200, "paths": 50, "horizon": 500}

_TOP_KEYS = {
    "seed", "runs", "horizon", "initial_budget", "shared_environments",
    "alpha", "paths", "environment", "policies",
}
_ENV_KEYS = {"arm_count", "mean_low", "mean_high", "sigma_shape", "sigma_rate"}
_POLICY_KEYS = {"kind", "alpha", "lambda", "paths"}


def _number(value: Any, where: str, kind: type = float) -> Any:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigurationError(f"{where}: expected a number, got {value!r}")
    if kind is int:
        if int(value) != value:
            raise ConfigurationError(f"{where}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _check_keys(section: Mapping, allowed: set, where: str) -> None:
    if not isinstance(section, Mapping):
        raise ConfigurationError(f"{where}: expected a mapping, got {type(section).__name__}")
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigurationError(f"{where}: unknown field(s) {', '.join(map(str, unknown))}")


def _parse_environment(raw: Any) -> EnvironmentSpec | Environment:
    if raw is None:
        return EnvironmentSpec()
    if isinstance(raw, Mapping) and "arms" in raw:
        _check_keys(raw, {"arms"}, "environment")
        arms = raw["arms"]
        if not isinstance(arms, list) or not arms:
            raise ConfigurationError("environment.arms: expected a non-empty list")
        parsed = []
        for i, arm in enumerate(arms):
            where = f"environment.arms[{i}]"
            _check_keys(arm, {"mean", "std_dev"}, where)
            std_dev = _number(arm.get("std_dev", 0.0), f"{where}.std_dev")
            if std_dev < 0:
                raise ConfigurationError(f"{where}.std_dev: must be >= 0, got {std_dev!r}")
            parsed.append(ArmSpec(_number(arm.get("mean"), f"{where}.mean"), std_dev))
        return Environment(tuple(parsed))
    _check_keys(raw, _ENV_KEYS, "environment")
    kwargs = {}
    for key in _ENV_KEYS & set(raw):
        kwargs[key] = _number(raw[key], f"environment.{key}", int if key == "arm_count" else float)
    spec = EnvironmentSpec(**kwargs)
    try:
        spec.validate()
    except ConfigurationError as exc:
        raise ConfigurationError(f"environment: {exc}") from None
    return spec


def _parse_policies(raw: Any, alpha: float, paths: int) -> list[PolicyConfig]:
    if not isinstance(raw, list) or not raw:
        raise ConfigurationError("policies: expected a non-empty list")
    out = []
    for i, entry in enumerate(raw):
        where = f"policies[{i}]"
        if isinstance(entry, str):
            entry = {"kind": entry}
        _check_keys(entry, _POLICY_KEYS, where)
        try:
            kind = PolicyKind(entry.get("kind"))
        except ValueError:
            choices = ", ".join(k.value for k in PolicyKind)
            raise ConfigurationError(f"{where}.kind: expected one of {choices}, got {entry.get('kind')!r}") from None
        lams = entry.get("lambda", 0.0)
        lams = lams if isinstance(lams, list) else [lams]
        if not lams:
            raise ConfigurationError(f"{where}.lambda: empty list")
        p_alpha = _number(entry.get("alpha", alpha), f"{where}.alpha")
        p_paths = _number(entry.get("paths", paths), f"{where}.paths", int)
        for j, lam in enumerate(lams):
            lam_where = f"{where}.lambda" + (f"[{j}]" if len(lams) > 1 else "")
            lam = _number(lam, lam_where)
            try:
                out.append(PolicyConfig(kind, alpha=p_alpha, lam=lam, paths=p_paths))
            except ConfigurationError as exc:
                field = str(exc).split()[0]
                prefix = lam_where if field == "lambda" else f"{where}.{field}"
                raise ConfigurationError(f"{prefix}: {exc}") from None
    return out


def parse_config(raw: Mapping, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    """Build an :class:`ExperimentConfig` from a mapping.

    ``overrides`` (keys ``runs``, ``horizon``, ``seed``, ``paths``, ``alpha``,
    ``initial_budget``) take precedence over the mapping; ``None`` values are
    ignored. ``paths`` and ``alpha`` override every policy.
    """
    if raw is None:
        raw = {}
    _check_keys(raw, _TOP_KEYS, "config")
    merged = dict(raw)
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    for key in ("runs", "horizon", "seed", "initial_budget"):
        if key in overrides:
            merged[key] = overrides[key]

    alpha = _number(merged.get("alpha", 10.0), "alpha")
    paths = _number(merged.get("paths", 100), "paths", int)
    policies = _parse_policies(merged.get("policies"), alpha, paths)
    if "alpha" in overrides or "paths" in overrides:
        policies = [
            replace(
                p,
                alpha=float(overrides.get("alpha", p.alpha)),
                paths=int(overrides.get("paths", p.paths)),
            )
            for p in policies
        ]

    shared = merged.get("shared_environments", True)
    if not isinstance(shared, bool):
        raise ConfigurationError(f"shared_environments: expected true/false, got {shared!r}")
    config = ExperimentConfig(
        env_spec=_parse_environment(merged.get("environment")),
        policies=tuple(policies),
        runs=_number(merged.get("runs", 1000), "runs", int),
        horizon=_number(merged.get("horizon", 500), "horizon", int),
        initial_budget=_number(merged.get("initial_budget", 0.5), "initial_budget"),
        master_seed=_number(merged.get("seed", 0), "seed", int),
        shared_environments=shared,
    )
    try:
        config.validate()
    except ConfigurationError as exc:
        raise ConfigurationError(f"config: {exc}") from None
    return config


def load_config(path: str | Path, overrides: Optional[Mapping[str, Any]] = None) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML ({exc})") from None
    return parse_config(raw, overrides)


def config_to_dict(config: ExperimentConfig) -> dict:
    """Canonical mapping that :func:`parse_config` maps back to ``config``."""
    env = config.env_spec
    if isinstance(env, Environment):
        env_raw: dict = {"arms": [{"mean": a.mean, "std_dev": a.std_dev} for a in env.arms]}
    else:
        env_raw = {
            "arm_count": env.arm_count,
            "mean_low": env.mean_low,
            "mean_high": env.mean_high,
            "sigma_shape": env.sigma_shape,
            "sigma_rate": env.sigma_rate,
        }
    return {
        "seed": config.master_seed,
        "runs": config.runs,
        "horizon": config.horizon,
        "initial_budget": config.initial_budget,
        "shared_environments": config.shared_environments,
        "environment": env_raw,
        "policies": [
            {"kind": p.kind.value, "alpha": p.alpha, "lambda": p.lam, "paths": p.paths}
            for p in config.policies
        ],
    }


def expand_lambdas(config: ExperimentConfig, lambdas: Iterable[float]) -> ExperimentConfig:
    """Replace each ruin-averse policy by one copy per value in ``lambdas``."""
    lambdas = list(lambdas)
    if not lambdas:
        raise ConfigurationError("lambdas: at least one value is required")
    policies: list[PolicyConfig] = []
    seen = set()
    for p in config.policies:
        expanded = [replace(p, lam=float(lam)) for lam in lambdas] if p.kind.ruin_averse else [p]
        for q in expanded:
            if q not in seen:
                seen.add(q)
                policies.append(q)
    return replace(config, policies=tuple(policies))
