"""
Flat YAML configuration files.

Shipped defaults live in config/, reference values and acceptance thresholds in
policies/. A run resolves its settings as shipped defaults, then the user's
--config file, then explicit command-line flags.
"""

from __future__ import annotations

import logging
from collections.abc import Iterable, Mapping
from pathlib import Path
from typing import Any

import yaml

from cqdd.errors import ConfigError

logger = logging.getLogger(__name__)

REPO_ROOT = Path(__file__).resolve().parents[2]
CONFIG_DIR = REPO_ROOT / "config"
POLICY_DIR = REPO_ROOT / "policies"
SCHEMA_DIR = REPO_ROOT / "schemas"

REFERENCE_POLICY = POLICY_DIR / "reference.yaml"

_SCALARS = (str, int, float, bool, type(None))


def load_yaml(path: str | Path) -> dict[str, Any]:
    """Read a YAML mapping. Raises FileNotFoundError if the file is absent."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"Config file not found: {path}")
    with open(path, "r", encoding="utf-8") as f:
        data = yaml.safe_load(f)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping, got {type(data).__name__}")
    return data


def load_flat_config(path: str | Path, allowed: Iterable[str] | None = None) -> dict[str, Any]:
    """Read a flat key-value YAML file, rejecting nesting and unknown keys."""
    data = load_yaml(path)
    for key, value in data.items():
        if not isinstance(key, str):
            raise ConfigError(f"{path}: keys must be strings, got {key!r}")
        if not isinstance(value, _SCALARS):
            raise ConfigError(f"{path}: '{key}' must be a scalar, got {type(value).__name__}")
    if allowed is not None:
        unknown = sorted(set(data) - set(allowed))
        if unknown:
            raise ConfigError(f"{path}: unknown keys {', '.join(unknown)}")
    return data


def load_defaults(name: str) -> dict[str, Any]:
    """Shipped defaults config/<name>.yaml."""
    return load_flat_config(CONFIG_DIR / f"{name}.yaml")


def resolve_settings(
    defaults: Mapping[str, Any],
    config_file: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> dict[str, Any]:
    """
    Merge defaults <- config file <- overrides.

    Only keys already present in `defaults` may be set. Overrides whose value is
    None are treated as "not given on the command line".
    """
    resolved = dict(defaults)
    if config_file is not None:
        from_file = load_flat_config(config_file, allowed=defaults.keys())
        logger.debug("Loaded %d settings from %s", len(from_file), config_file)
        resolved.update(from_file)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        if key not in defaults:
            raise ConfigError(f"unknown setting '{key}'")
        resolved[key] = value
    return resolved


def load_reference(path: str | Path | None = None) -> dict[str, Any]:
    """Published reference values and acceptance thresholds."""
    return load_yaml(path or REFERENCE_POLICY)
