"""JSON run configuration: schema validation and resolved snapshots.

Configs are plain nested dicts checked against an explicit schema; unknown
keys are rejected with their full path so typos fail loudly instead of
silently using defaults. Every CLI run writes the fully resolved config
(defaults filled in, flag overrides applied) next to its outputs.
"""

from __future__ import annotations

import json
from typing import Any

__all__ = ["ConfigError", "resolve_config", "load_config", "DEFAULTS"]


class ConfigError(ValueError):
    pass


# (type, default) per leaf; nested dicts define sections.
DEFAULTS: dict[str, Any] = {
    "seed": (int, 0),
    "threads": (int, 1),
    "deterministic": (bool, True),
    "encoder": {
        "alpha": (int, 2),
        "delta_max": ((int, type(None)), None),  # None: fit to the graph
        "apply_log": (bool, True),
        "apply_unit_norm": (bool, True),
        "log_degree_bins": (bool, False),
    },
    "walks": {
        "walks_per_node": (int, 10),
        "walk_length": (int, 80),
    },
    "unsupervised": {
        "dim": (int, 8),
        "negatives": (int, 5),
        "window": (int, 10),
        "learning_rate": (float, 0.01),
        "epochs": (int, 5),
        "batch_size": (int, 10000),
        "optimizer": (str, "adam"),
        "noise": (str, "uniform"),
        "dtype": (str, "float64"),
    },
    "supervised": {
        "hidden": (list, [256, 256, 256]),
        "activation": (str, "elu"),
        "learning_rate": (float, 0.005),
        "epochs": (int, 1000),
        "patience": (int, 100),
        "threshold": (float, 0.5),
    },
    "link_prediction": {
        "fraction": (float, 0.5),
        "classifier_test_fraction": (float, 0.5),
        "classifier_iterations": (int, 500),
        "classifier_l2": (float, 1e-4),
        "classifier_learning_rate": (float, 0.05),
    },
    "cluster": {
        "k_min": (int, 2),
        "k_max": (int, 15),
    },
    "bench": {
        "sizes": (list, [1024, 2048, 4096, 8192, 16384]),
        "degrees": (list, [2, 4, 8, 16, 32]),
        "alphas": (list, [1, 2]),
        "replicates": (int, 3),
        "fixed_degree": (float, 8.0),
        "fixed_size": (int, 4096),
    },
}


def _resolve(section: dict, schema: dict, path: str) -> dict:
    out = {}
    for key, value in section.items():
        if key not in schema:
            raise ConfigError(f"unknown config key: {path}{key}")
        spec = schema[key]
        if isinstance(spec, dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path}{key} must be an object")
            out[key] = _resolve(value, spec, f"{path}{key}.")
        else:
            typ, _ = spec
            if typ is float and isinstance(value, int) and \
                    not isinstance(value, bool):
                value = float(value)
            if typ is bool and not isinstance(value, bool):
                raise ConfigError(f"{path}{key} must be a boolean")
            if not isinstance(value, typ) or \
                    (typ is int and isinstance(value, bool)):
                raise ConfigError(
                    f"{path}{key} has wrong type {type(value).__name__}")
            out[key] = value
    for key, spec in schema.items():
        if key in out:
            continue
        if isinstance(spec, dict):
            out[key] = _resolve({}, spec, f"{path}{key}.")
        else:
            out[key] = spec[1]
    return out


def resolve_config(raw: dict) -> dict:
    """Validate a config dict against the schema and fill in defaults."""
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    return _resolve(raw, DEFAULTS, "")


def load_config(path: str | None) -> dict:
    if path is None:
        return resolve_config({})
    with open(path, "r", encoding="utf-8") as f:
        try:
            raw = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON ({e})") from None
    return resolve_config(raw)
