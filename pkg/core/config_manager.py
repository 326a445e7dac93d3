"""
Configuration Manager Module
Loads experiment configs, merges them over defaults and gives them a stable identity.
"""

import copy
import hashlib
import json
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple, Union

from .errors import ConfigError


logger = logging.getLogger(__name__)

OUTPUT_ROOT_ENV = "AIC_OUTPUT_ROOT"


def get_output_root() -> Path:
    """Default directory for run outputs: $AIC_OUTPUT_ROOT or ./runs."""
    base = os.environ.get(OUTPUT_ROOT_ENV)
    return Path(base) if base else Path.cwd() / "runs"


# Default experiment values; files only need to state what differs.
DEFAULT_CONFIG: Dict[str, Any] = {
    "name": "",
    "description": "",
    "seed": 0,
    "dt": 0.001,
    "duration": 10.0,
    "rate_divider": 1,
    "plant": {
        "type": "msd",
        "params": {},
        "q0": 0.0,
        "q_dot0": 0.0,
    },
    "noise": {
        "sigma_pos": 0.001,
        "sigma_vel": 0.01,
    },
    "controller": {
        "type": "aic",
        "gains": {
            "kappa_mu": 20.0,
            "kappa_a": 600.0,
            "kappa_sigma": 1.0,
            "kappa_tau": 1.0,
        },
        "precisions": {
            "pi_o": 1.0,
            "pi_op": 1.0,
            "pi_mu": 1.0,
            "pi_mup": 1.0,
        },
        "beta": 2.0,
        "beta_floor": 0.5,
        "precision_floor": 0.01,
        "learning": {
            "learn_pi_o": False,
            "learn_pi_op": False,
            "learn_beta": False,
        },
        "belief0": {
            "mu": 0.0,
            "mu_p": 0.0,
            "mu_pp": 0.0,
        },
        "action0": 0.0,
        "a_limit": None,
        "pid": {
            "matched": False,
            "p": 0.0,
            "i": 0.0,
            "d": 0.0,
        },
    },
    "targets": [[0.0, 1.0]],
    "payloads": [],
    "variants": [],
}

# Sections whose contents are free-form and not checked against defaults.
_OPEN_SECTIONS = {"plant.params"}


def deep_merge(base: Dict[str, Any], override: Dict[str, Any], path: str = "",
               strict: bool = True) -> Dict[str, Any]:
    """
    Recursively merge override into a copy of base.

    Args:
        base: Defaults
        override: Values to apply
        path: Dotted prefix used in error messages
        strict: Reject keys absent from base

    Returns:
        Merged copy
    """
    merged = copy.deepcopy(base)
    for key, value in override.items():
        dotted = f"{path}.{key}" if path else key
        if strict and key not in merged and path not in _OPEN_SECTIONS:
            raise ConfigError(f"unknown config key '{dotted}'", key=dotted)
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value, dotted, strict)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def get_path(data: Dict[str, Any], dotted: str) -> Any:
    node: Any = data
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"config path '{dotted}' does not exist", key=dotted)
        node = node[part]
    return node


def set_path(data: Dict[str, Any], dotted: str, value: Any) -> None:
    parts = dotted.split(".")
    node = data
    for part in parts[:-1]:
        if not isinstance(node.get(part), dict):
            if dotted.startswith("plant.params."):
                node = node.setdefault(part, {})
                continue
            raise ConfigError(f"config path '{dotted}' does not exist", key=dotted)
        node = node[part]
    if parts[-1] not in node and not dotted.startswith("plant.params."):
        raise ConfigError(f"config path '{dotted}' does not exist", key=dotted)
    node[parts[-1]] = copy.deepcopy(value)


def read_json(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Read a JSON object from disk.

    Raises:
        FileNotFoundError: if the file does not exist
        ConfigError: if it is not a JSON object
    """
    path = Path(path)
    with open(path, "r", encoding="utf-8") as f:
        try:
            data = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path.name} is not valid JSON: {e.msg}", line=e.lineno) from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path.name} must contain a JSON object")
    return data


class ConfigManager:
    """One experiment configuration, merged over DEFAULT_CONFIG."""

    def __init__(self, data: Optional[Dict[str, Any]] = None, source: Optional[Path] = None):
        self._config: Dict[str, Any] = copy.deepcopy(DEFAULT_CONFIG)
        self.source = source
        if data:
            self.update(data)

    @classmethod
    def from_file(cls, path: Union[str, Path]) -> "ConfigManager":
        path = Path(path)
        config = cls(read_json(path), source=path)
        logger.debug("loaded config %s", path)
        return config

    def get(self, key: str, default: Any = None) -> Any:
        """Get a value by dotted path."""
        try:
            return get_path(self._config, key)
        except ConfigError:
            return default

    def set(self, key: str, value: Any) -> None:
        """Set a value by dotted path."""
        set_path(self._config, key, value)

    def update(self, values: Dict[str, Any]) -> None:
        """Deep-merge values into the configuration."""
        self._config = deep_merge(self._config, values)

    def reset(self) -> None:
        """Reset configuration to defaults."""
        self._config = copy.deepcopy(DEFAULT_CONFIG)

    @property
    def all(self) -> Dict[str, Any]:
        """Get all configuration values."""
        return copy.deepcopy(self._config)

    def normal_form(self) -> str:
        """Canonical JSON text: merged values, sorted keys, no whitespace."""
        return json.dumps(self._config, sort_keys=True, separators=(",", ":"), allow_nan=False)

    def config_hash(self) -> str:
        return hashlib.sha256(self.normal_form().encode("utf-8")).hexdigest()

    def save(self, path: Union[str, Path]) -> None:
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self._config, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
        logger.debug("saved config to %s", path)

    def variants(self) -> List[Tuple[Optional[str], Dict[str, Any]]]:
        """
        Expand the variants list.

        Returns:
            (label, merged config) per variant, or a single (None, config) when the
            config declares no variants
        """
        base = self.all
        declared = base.pop("variants", [])
        if not declared:
            return [(None, base)]
        expanded = []
        seen = set()
        for i, variant in enumerate(declared):
            if not isinstance(variant, dict) or "label" not in variant:
                raise ConfigError("each variant needs a label", key=f"variants[{i}]")
            label = str(variant["label"])
            if label in seen:
                raise ConfigError(f"duplicate variant label '{label}'", key=f"variants[{i}]")
            seen.add(label)
            merged = deep_merge(base, variant.get("overrides", {}), strict=True)
            expanded.append((label, merged))
        return expanded

    def validate(self) -> None:
        """
        Check every variant parses into an episode.

        Raises:
            ConfigError: on the first schema violation
        """
        from .simulation import EpisodeConfig

        for label, data in self.variants():
            try:
                EpisodeConfig.from_dict(data)
            except ConfigError as e:
                if label is not None:
                    e.context["variant"] = label
                raise
