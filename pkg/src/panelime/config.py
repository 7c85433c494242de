"""Configuration for panelime.

Two layers: a process-wide runtime config read from ``PANELIME_*``
environment variables (cached singleton), and a per-experiment
``PipelineConfig`` loaded from a TOML file with flag overrides on top.
"""

from __future__ import annotations

import os
import sys
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Any, Dict, Mapping

import tomli_w
from pydantic import ValidationError

from .errors import PanelimeError
from .models.pipeline import PipelineConfig

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib


class ConfigurationError(PanelimeError, RuntimeError):
    """The runtime environment or an experiment file is unusable."""


_ENV_VARS = (
    "PANELIME_LOG_LEVEL",
    "PANELIME_DEBUG",
    "PANELIME_OUTPUT_DIR",
    "PANELIME_WRITE_PLOTS",
    "PANELIME_N_JOBS",
)
_FALSE_WORDS = frozenset({"0", "false", "no", "off"})


def _env_flag(name: str, default: bool) -> bool:
    """``0/false/no/off`` in any case mean False; any other set value means True."""
    value = os.environ.get(name)
    return default if value is None else value.strip().lower() not in _FALSE_WORDS


def _env_text(name: str, default: str) -> str:
    return os.environ.get(name, default)


def _env_count(name: str, default: int) -> int:
    value = os.environ.get(name)
    if value is None:
        return default
    try:
        return int(value)
    except ValueError as exc:
        raise ConfigurationError(f"{name} must be an integer, got {value!r}.") from exc


@dataclass
class Config:
    """Mutable runtime configuration.

    Environment Variables:
        PANELIME_LOG_LEVEL: Logging level (default: "INFO")
        PANELIME_DEBUG: Force DEBUG logging (default: False)
        PANELIME_OUTPUT_DIR: Artifact root when no config/flag names one (default: "artifacts")
        PANELIME_WRITE_PLOTS: Emit SVG figures next to JSON/CSV artifacts (default: True)
        PANELIME_N_JOBS: Workers handed to tree ensembles (default: 1)
    """

    log_level: str
    """Logging level: DEBUG, INFO, WARNING, ERROR, CRITICAL."""

    debug: bool
    """Force DEBUG logging regardless of log_level."""

    output_dir: str
    """Fallback artifact root."""

    write_plots: bool
    """Write SVG figures. JSON artifacts are unaffected."""

    n_jobs: int
    """Parallel workers for scikit-learn ensembles."""

    # raw PANELIME_* values as seen at load time
    _initial_env: Dict[str, Any] = field(default_factory=dict, repr=False)


@lru_cache(maxsize=1)
def get_config() -> Config:
    """Return the global runtime configuration singleton.

    Values are read from the environment on first call and cached;
    call ``reset_config()`` to re-read.
    """
    config = Config(
        log_level=_env_text("PANELIME_LOG_LEVEL", "INFO").upper(),
        debug=_env_flag("PANELIME_DEBUG", False),
        output_dir=_env_text("PANELIME_OUTPUT_DIR", "artifacts"),
        write_plots=_env_flag("PANELIME_WRITE_PLOTS", True),
        n_jobs=_env_count("PANELIME_N_JOBS", 1),
    )
    config._initial_env = {name: os.getenv(name) for name in _ENV_VARS}

    valid_log_levels = {"DEBUG", "INFO", "WARNING", "ERROR", "CRITICAL"}
    if config.log_level not in valid_log_levels:
        raise ConfigurationError(
            f"PANELIME_LOG_LEVEL must be one of {sorted(valid_log_levels)}. "
            f"Got: {config.log_level}"
        )
    if config.n_jobs == 0:
        raise ConfigurationError("PANELIME_N_JOBS must be nonzero (use -1 for all cores).")

    return config


def set_config_value(key: str, value: Any) -> None:
    """Override one field of the cached runtime config, mostly from tests."""
    config = get_config()
    if key.startswith("_") or not hasattr(config, key):
        raise AttributeError(f"Config has no setting '{key}'")
    setattr(config, key, value)


def reset_config() -> None:
    """Clear the configuration cache so the environment is re-read."""
    get_config.cache_clear()


# === EXPERIMENT CONFIG (TOML) ===


def _merge(base: Dict[str, Any], overrides: Mapping[str, Any]) -> Dict[str, Any]:
    merged = dict(base)
    for key, value in overrides.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = _merge(dict(merged[key]), value)
        else:
            merged[key] = value
    return merged


def load_pipeline_config(
    path: Path | str, overrides: Mapping[str, Any] | None = None
) -> PipelineConfig:
    """Read a TOML experiment file and apply nested ``overrides`` on top.

    Relative ``dataset``/``rename_map``/``output_dir`` paths resolve against
    the config file's directory.

    Raises:
        ConfigurationError: unreadable or invalid file
    """
    path = Path(path)
    try:
        raw = tomllib.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigurationError(f"Cannot read config file {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigurationError(f"Config file {path} is not valid TOML: {exc}") from exc

    data = _merge(raw, overrides or {})
    for key in ("dataset", "rename_map", "output_dir"):
        value = data.get(key)
        if value is not None and not Path(value).is_absolute():
            data[key] = str((path.parent / value).resolve())

    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as exc:
        first = exc.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "<root>"
        raise ConfigurationError(
            f"Invalid config {path}: {location}: {first['msg']}"
        ) from exc


def dump_pipeline_config(config: PipelineConfig) -> str:
    """Serialise to TOML text that ``load_pipeline_config`` reads back."""
    return tomli_w.dumps(config.model_dump(mode="json", exclude_none=True))


__all__ = [
    "Config",
    "ConfigurationError",
    "get_config",
    "set_config_value",
    "reset_config",
    "load_pipeline_config",
    "dump_pipeline_config",
]
