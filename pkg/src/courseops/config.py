"""Service configuration: plain key=value file with environment overrides.

Precedence: built-in defaults < config file < COURSEOPS_* environment
variables.  Unknown keys are errors; silent typos in ops config are worse
than a crash at startup.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Mapping

ENV_PREFIX = "COURSEOPS_"


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ServiceConfig:
    port: int = 8642
    data_dir: Path = Path("data")
    timezone: str = "America/New_York"
    late_threshold_min: float = 10
    early_leave_threshold_min: float = 10
    escalation_lead_hours: float = 24
    cooldown_days: int = 14

    def __post_init__(self) -> None:
        if not 1 <= self.port <= 65535:
            raise ConfigError(f"port {self.port} out of range")
        if self.escalation_lead_hours < 0 or self.cooldown_days < 0:
            raise ConfigError("lead hours and cooldown must be >= 0")


def _coerce(name: str, kind: type, raw: str):
    raw = raw.strip()
    try:
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        if kind is Path:
            return Path(raw)
        return raw
    except ValueError:
        raise ConfigError(f"bad value for {name}: {raw!r}") from None


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"line {lineno}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        out[key.strip()] = value.strip()
    return out


def load_config(
    path: Path | None = None, env: Mapping[str, str] | None = None
) -> ServiceConfig:
    env = os.environ if env is None else env
    field_types = {f.name: f.type for f in fields(ServiceConfig)}
    # from __future__ annotations leaves types as strings; map them back
    kinds = {
        "port": int,
        "data_dir": Path,
        "timezone": str,
        "late_threshold_min": float,
        "early_leave_threshold_min": float,
        "escalation_lead_hours": float,
        "cooldown_days": int,
    }
    assert set(kinds) == set(field_types)

    values: dict = {}
    if path is not None:
        try:
            text = path.read_text()
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        for key, raw in parse_config_text(text).items():
            if key not in kinds:
                raise ConfigError(f"unknown config key {key!r}")
            values[key] = _coerce(key, kinds[key], raw)

    for key, kind in kinds.items():
        env_key = ENV_PREFIX + key.upper()
        if env_key in env:
            values[key] = _coerce(key, kind, env[env_key])

    return ServiceConfig(**values)
