"""JSON run configuration: schema, validation and conversion to engine objects."""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

import jsonschema

from .exceptions import ConfigError, IRBoundError
from .lattice import CouplingFamily, CouplingTable, Torus, family_from_dict

__all__ = ["SCHEMA", "load_config", "validate_config", "parse_beta", "parse_ell", "families_from_config",
           "table_from_config", "ratio_values"]

_NUM = {"type": "number"}
_BETA = {"oneOf": [{"type": "number", "exclusiveMinimum": 0}, {"const": "inf"}]}

_FAMILY_PARAMS = {
    "nearest_neighbour": {"J": _NUM},
    "yukawa": {"a": _NUM, "b": _NUM},
    "power_law_l1": {"a": _NUM, "s": _NUM},
    "random_walk": {"c": _NUM, "lam": _NUM},
    "euclidean_power": {"a": _NUM, "u": _NUM},
}


def _family_schema():
    variants = [
        {
            "type": "object",
            "properties": {"family": {"const": name}, **props},
            "required": ["family", *props],
            "additionalProperties": False,
        }
        for name, props in _FAMILY_PARAMS.items()
    ]
    variants.append(
        {
            "type": "object",
            "properties": {
                "family": {"const": "convex_combination"},
                "weights": {"type": "array", "items": {"type": "number", "minimum": 0}},
                "families": {"type": "array", "items": {"$ref": "#/$defs/axis_family"}},
            },
            "required": ["family", "weights", "families"],
            "additionalProperties": False,
        }
    )
    return {"oneOf": variants}


def _axis_params_schema():
    # per-axis parameters for a single named family: the family key is implied
    return {
        "type": "object",
        "properties": {"1": {"type": "object"}, "2": {"type": "object"}, "3": {"type": "object"}},
        "required": ["1", "2", "3"],
        "additionalProperties": False,
    }


_RANGE = {
    "type": "object",
    "properties": {"start": _NUM, "stop": _NUM, "step": {"type": "number", "exclusiveMinimum": 0}},
    "required": ["start", "stop", "step"],
    "additionalProperties": False,
}

SCHEMA: dict[str, Any] = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "$defs": {"axis_family": _family_schema()},
    "type": "object",
    "properties": {
        "command": {"enum": ["table1", "certify", "scan", "verify", "rp-check"]},
        "dimension": {"type": "integer", "minimum": 1},
        "ell": {"oneOf": [{"type": "integer", "minimum": 1}, {"const": "inf"}]},
        "spin_times_two": {"type": "integer", "minimum": 1},
        "beta": _BETA,
        "couplings": {
            "type": "object",
            "properties": {
                "family": {"enum": [*_FAMILY_PARAMS, "convex_combination"]},
                "params": _axis_params_schema(),
            },
            "required": ["family", "params"],
            "additionalProperties": False,
        },
        "alpha_mode": {
            "oneOf": [
                {"enum": ["worst_case", "kk"]},
                {
                    "type": "object",
                    "properties": {"measured": {"type": "number", "minimum": 0}},
                    "required": ["measured"],
                    "additionalProperties": False,
                },
            ]
        },
        "grid": {
            "type": "object",
            "properties": {
                "dimension": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "spin_times_two": {"type": "array", "items": {"type": "integer", "minimum": 1}},
                "ratio": {"oneOf": [{"type": "array", "items": {"type": "number", "minimum": 0, "maximum": 1}}, _RANGE]},
                "beta": {"type": "array", "items": _BETA},
                "ell": {"type": "array", "items": {"oneOf": [{"type": "integer", "minimum": 2}, {"const": "inf"}]}},
            },
            "additionalProperties": False,
        },
        "tolerances": {
            "type": "object",
            "properties": {
                "check": {"type": "number", "exclusiveMinimum": 0},
                "rp_rel": {"type": "number", "minimum": 0},
                "tail": {"type": "number", "exclusiveMinimum": 0},
                "ratio": {"type": "number", "exclusiveMinimum": 0},
            },
            "additionalProperties": False,
        },
        "samples": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0, "maximum": 2**64 - 1},
    },
    "additionalProperties": False,
}


def validate_config(cfg: Any) -> dict:
    """Validate against :data:`SCHEMA` plus the per-family parameter schemas."""
    try:
        jsonschema.validate(cfg, SCHEMA)
        if "couplings" in cfg:
            fam = cfg["couplings"]["family"]
            sub = {"$defs": SCHEMA["$defs"], **SCHEMA["$defs"]["axis_family"]}
            for axis in ("1", "2", "3"):
                jsonschema.validate({"family": fam, **cfg["couplings"]["params"][axis]}, sub)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid configuration at {where}: {exc.message}") from None
    return cfg


def load_config(path: str | Path) -> dict:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"configuration {path} is not valid JSON: {exc}") from None
    return validate_config(cfg)


def parse_beta(value) -> float:
    return math.inf if value == "inf" else float(value)


def parse_ell(value) -> int | None:
    return None if value == "inf" else int(value)


def families_from_config(couplings: dict) -> list[CouplingFamily]:
    fam = couplings["family"]
    try:
        return [family_from_dict({"family": fam, **couplings["params"][a]}) for a in ("1", "2", "3")]
    except IRBoundError as exc:
        raise ConfigError(str(exc)) from None


def table_from_config(cfg: dict) -> CouplingTable:
    for key in ("dimension", "ell", "couplings"):
        if key not in cfg:
            raise ConfigError(f"configuration needs '{key}'")
    ell = parse_ell(cfg["ell"])
    if ell is None:
        raise ConfigError("a coupling table needs a finite side length")
    tail = cfg.get("tolerances", {}).get("tail", 1e-12)
    return CouplingTable.from_families(Torus(cfg["dimension"], ell), families_from_config(cfg["couplings"]), tail)


def ratio_values(grid_spec) -> list[float]:
    """Expand a ratio list or ``{start, stop, step}`` range (inclusive, rounded to 12 digits)."""
    if isinstance(grid_spec, list):
        return [float(x) for x in grid_spec]
    start, stop, step = grid_spec["start"], grid_spec["stop"], grid_spec["step"]
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(max(n, 0))]
