"""Campaign configuration: a versionable TOML file plus flag overrides.

Flags always win over file values; the dump/parse pair round-trips so a
campaign can be archived and replayed from its normalized config.
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from typing import Optional

try:
    import tomllib
except ImportError:  # Python < 3.11
    import tomli as tomllib

from .errors import ConfigError

DEFAULT_TIMES_MT = 4
DEFAULT_PRUNE_RATIO = 0.5


@dataclass(frozen=True)
class CampaignConfig:
    seed_path: str
    kb_dir: str
    manifest_path: Optional[str] = None
    times_mt: int = DEFAULT_TIMES_MT
    prune_ratio: float = DEFAULT_PRUNE_RATIO
    runner_cmd: tuple[str, ...] = ()
    timeout_secs: float = 60.0
    workers: int = 1
    rng_seed: int = 0
    out_dir: str = "blockforge-out"
    shared_session: bool = False
    ar_weight: float = 0.5
    bc_cap: int = 3

    def __post_init__(self):
        if self.times_mt < 1:
            raise ConfigError("times_mt must be >= 1")
        if not (0.0 < self.prune_ratio <= 1.0):
            raise ConfigError("prune_ratio must be in (0, 1]")
        if self.timeout_secs <= 0:
            raise ConfigError("timeout_secs must be positive")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not (0.0 <= self.ar_weight <= 1.0):
            raise ConfigError("ar_weight must be in [0, 1]")
        if self.bc_cap < 0:
            raise ConfigError("bc_cap must be >= 0")


def parse_config(path) -> CampaignConfig:
    """Load a TOML campaign config; unknown keys are schema errors."""
    try:
        with open(path, "rb") as handle:
            doc = tomllib.load(handle)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    known = {f.name for f in fields(CampaignConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"{path}: unknown config keys {sorted(unknown)}")
    if "runner_cmd" in doc:
        doc["runner_cmd"] = tuple(doc["runner_cmd"])
    missing = {"seed_path", "kb_dir"} - set(doc)
    if missing:
        raise ConfigError(f"{path}: missing required keys {sorted(missing)}")
    try:
        return CampaignConfig(**doc)
    except TypeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _toml_value(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (tuple, list)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    return '"' + str(value).replace("\\", "\\\\").replace('"', '\\"') + '"'


def dump_config(config: CampaignConfig) -> str:
    """Normalized TOML rendering; parse(dump(c)) == c."""
    lines = []
    for f in sorted(fields(CampaignConfig), key=lambda f: f.name):
        value = getattr(config, f.name)
        if value is None:
            continue
        lines.append(f"{f.name} = {_toml_value(value)}")
    return "\n".join(lines) + "\n"


def apply_overrides(config: CampaignConfig, **overrides) -> CampaignConfig:
    """Flag overrides beat file values; None means 'not given'."""
    given = {k: v for k, v in overrides.items() if v is not None}
    if "runner_cmd" in given:
        given["runner_cmd"] = tuple(given["runner_cmd"])
    return replace(config, **given) if given else config
