"""Run configuration: a flat key-value file with one section per module.

Configs are plain INI text (configparser syntax).  Parsing validates every
key against the schema below, emission writes sections and keys in schema
order, and parse(emit(cfg)) reproduces the config exactly, so every run can
drop its fully resolved configuration next to its artifacts.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, field

from .errors import SchemaError

_SENTINEL_AUTO = "auto"


def _parse_bool(text: str) -> bool:
    t = text.strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _parse_opt_float(text: str):
    t = text.strip().lower()
    if t in (_SENTINEL_AUTO, ""):
        return None
    return float(text)


def _parse_float_list(text: str):
    items = [p.strip() for p in text.split(",") if p.strip()]
    return tuple(float(p) for p in items)


def _emit_value(value) -> str:
    if value is None:
        return _SENTINEL_AUTO
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ",".join(repr(float(v)) for v in value)
    return str(value)


_PARSERS = {
    "int": int,
    "float": float,
    "bool": _parse_bool,
    "str": str,
    "optfloat": _parse_opt_float,
    "floatlist": _parse_float_list,
}

# section -> key -> (type name, default)
SCHEMA = {
    "run": {
        "seed": ("int", 0),
        "out": ("str", "runs/out"),
        "threads": ("int", 1),
    },
    "model": {
        "kind": ("str", "rbf"),
        "lag": ("int", 1),
        "neurons": ("int", 8),
        "basis": ("str", "gaussian"),
        "eta": ("optfloat", None),
        "squared": ("bool", False),
        "spline_order": ("int", 3),
        "metric": ("str", "euclidean"),
    },
    "prior": {
        "gamma": ("float", 1.0),
        "alpha": ("float", 1.0),
        "sticky": ("float", 10.0),
        "truncation": ("int", 20),
        "iw_dof": ("optfloat", None),
        "iw_scale": ("float", 0.75),
        "ridge": ("float", 1e-3),
        "center_noise": ("float", 0.01),
    },
    "gibbs": {
        "sweeps": ("int", 1000),
        "burn_in": ("int", 500),
        "thinning": ("int", 1),
        "center_resampling": ("bool", True),
        "fixed_weights": ("bool", False),
    },
    "synth": {
        "states": ("int", 6),
        "length": ("int", 10000),
        "dim": ("int", 1),
        "neurons": ("int", 5),
        "noise_var": ("float", 0.1),
        "self_transition": ("float", 0.95),
        "weight_scale": ("float", 2.0),
        "center_scale": ("float", 1.0),
    },
    "classify": {
        "fractions": ("floatlist", (0.001, 0.003, 0.01, 0.05, 0.2, 0.4, 0.6, 0.8)),
        "repeats": ("int", 20),
        "held_out": ("int", 5),
        "neurons": ("int", 250),
        "lag": ("int", 156),
        "aggregation": ("str", "sum"),
        "histogram_fraction": ("float", 0.2),
        "histogram_bins": ("int", 10),
        "id_column": ("str", ""),
        "label_column": ("str", ""),
        "thresholds": ("floatlist", tuple(round(0.05 * i, 2) for i in range(21))),
    },
    "paths": {
        "series": ("str", ""),
        "truth": ("str", ""),
        "data": ("str", ""),
        "fit_dir": ("str", ""),
        "synth_dir": ("str", ""),
        "classify_dir": ("str", ""),
        "run_dir": ("str", ""),
    },
}


@dataclass(eq=True)
class RunConfig:
    """Resolved configuration: every schema key has a concrete value."""

    values: dict = field(default_factory=dict)

    def get(self, section: str, key: str):
        return self.values[section][key]

    def set(self, section: str, key: str, value) -> None:
        if section not in SCHEMA or key not in SCHEMA[section]:
            raise SchemaError(f"unknown config key [{section}] {key}")
        self.values[section][key] = value

    def section(self, name: str) -> dict:
        return dict(self.values[name])


def default_config() -> RunConfig:
    return RunConfig({s: {k: default for k, (_, default) in keys.items()}
                      for s, keys in SCHEMA.items()})


def parse_config_text(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise SchemaError(f"malformed config: {exc}") from None
    cfg = default_config()
    for section in parser.sections():
        if section not in SCHEMA:
            raise SchemaError(f"unknown config section [{section}]")
        for key, raw in parser[section].items():
            if key not in SCHEMA[section]:
                raise SchemaError(f"unknown config key [{section}] {key}")
            kind = SCHEMA[section][key][0]
            try:
                cfg.values[section][key] = _PARSERS[kind](raw)
            except ValueError as exc:
                raise SchemaError(f"bad value for [{section}] {key}: {exc}") from None
    return cfg


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config_text(fh.read())


def emit_config_text(cfg: RunConfig) -> str:
    out = io.StringIO()
    for section, keys in SCHEMA.items():
        out.write(f"[{section}]\n")
        for key in keys:
            out.write(f"{key} = {_emit_value(cfg.values[section][key])}\n")
        out.write("\n")
    return out.getvalue()


def save_config(cfg: RunConfig, path) -> None:
    with open(path, "w") as fh:
        fh.write(emit_config_text(cfg))
