"""Run configuration: JSON schema, fraction-aware parsing, validation.

Configs are UTF-8 JSON.  Every numeric model parameter accepts either a
JSON number or a string holding an exact decimal or fraction ("1/3",
"19/40"); fractions are converted to the nearest double and every
inexact conversion is recorded in ``rounding_notes`` so reports can
disclose it.  The seed is required — there is no wall-clock fallback,
reproducibility is part of the output contract.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from importlib import resources

import jsonschema

from .model import (
    IsmSystem,
    Similitude,
    case_i_system,
    case_ii_system,
    normalize,
)


class ConfigError(ValueError):
    """Configuration rejected; the message names the offending element."""


_NUMBER = {
    "oneOf": [
        {"type": "number"},
        {
            "type": "string",
            "pattern": r"^-?[0-9]+(\.[0-9]+)?$|^-?[0-9]+/[1-9][0-9]*$",
        },
    ]
}

_MAP = {
    "type": "object",
    "required": ["scale", "translation"],
    "properties": {
        "scale": _NUMBER,
        "rotation": _NUMBER,
        "translation": {
            "type": "array",
            "items": _NUMBER,
            "minItems": 1,
            "maxItems": 2,
        },
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["system", "seed"],
    "properties": {
        "system": {
            "type": "object",
            "required": ["case", "dimension", "outer_maps", "p", "t"],
            "properties": {
                "case": {"enum": ["I", "II"]},
                "dimension": {"enum": [1, 2]},
                "outer_maps": {"type": "array", "minItems": 2, "items": _MAP},
                "inner_maps": {"type": "array", "minItems": 2, "items": _MAP},
                "p": {"type": "array", "minItems": 3, "items": _NUMBER},
                "t": {"type": "array", "minItems": 2, "items": _NUMBER},
            },
            "additionalProperties": False,
        },
        "r_list": {"type": "array", "minItems": 1, "items": _NUMBER},
        "k_list": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "integer", "minimum": 1},
        },
        "n_list": {
            "type": "array",
            "minItems": 1,
            "items": {"type": "integer", "minimum": 1},
        },
        "samples": {"type": "integer", "minimum": 2},
        "restarts": {"type": "integer", "minimum": 0},
        "seed": {"type": "integer", "minimum": 0},
        "out_dir": {"type": "string"},
        "toggles": {
            "type": "object",
            "properties": {
                "psi_h0": {"type": "boolean"},
                "aggregates_only": {"type": "boolean"},
                "warm_start": {"type": "boolean"},
            },
            "additionalProperties": False,
        },
        "crossing_bracket": {
            "type": "array",
            "minItems": 2,
            "maxItems": 2,
            "items": _NUMBER,
        },
    },
    "additionalProperties": False,
}


@dataclass(frozen=True)
class RunConfig:
    """Validated, normalized run parameters."""

    system: IsmSystem
    r_list: tuple[float, ...]
    k_list: tuple[int, ...]
    n_list: tuple[int, ...]
    samples: int
    restarts: int
    seed: int
    out_dir: str
    psi_h0: bool
    aggregates_only: bool
    warm_start: bool
    crossing_bracket: tuple[float, float] | None
    rounding_notes: tuple[str, ...]
    source_path: str | None


def _to_float(value, path: str, notes: list[str]) -> float:
    if isinstance(value, (int, float)):
        return float(value)
    frac = Fraction(value)
    out = float(frac)
    if Fraction(out) != frac:
        notes.append(f"{path} = {value} rounded to {out!r} (nearest double)")
    return out


def _build_map(data: dict, dimension: int, path: str,
               notes: list[str]) -> Similitude:
    scale = _to_float(data["scale"], f"{path}.scale", notes)
    default_rot = 1.0 if dimension == 1 else 0.0
    rotation = (
        _to_float(data["rotation"], f"{path}.rotation", notes)
        if "rotation" in data
        else default_rot
    )
    translation = tuple(
        _to_float(v, f"{path}.translation[{i}]", notes)
        for i, v in enumerate(data["translation"])
    )
    if len(translation) != dimension:
        raise ConfigError(
            f"{path}.translation has {len(translation)} coordinates, "
            f"dimension is {dimension}"
        )
    try:
        return Similitude(
            scale=scale, rotation=rotation, translation=translation
        )
    except ValueError as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data: dict, source_path: str | None = None) -> RunConfig:
    """Validate a parsed JSON object and build the run configuration."""
    try:
        jsonschema.validate(data, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        raise ConfigError(
            f"config invalid at {exc.json_path}: {exc.message}"
        ) from exc

    notes: list[str] = []
    sys_data = data["system"]
    case = sys_data["case"]
    dimension = sys_data["dimension"]
    outer = [
        _build_map(m, dimension, f"system.outer_maps[{i}]", notes)
        for i, m in enumerate(sys_data["outer_maps"])
    ]
    p = [
        _to_float(v, f"system.p[{i}]", notes)
        for i, v in enumerate(sys_data["p"])
    ]
    t = [
        _to_float(v, f"system.t[{i}]", notes)
        for i, v in enumerate(sys_data["t"])
    ]
    try:
        if case == "I":
            if "inner_maps" in sys_data:
                raise ConfigError(
                    "system.inner_maps is only valid for case II"
                )
            system = case_i_system(tuple(outer), tuple(p), tuple(t))
        else:
            if "inner_maps" not in sys_data:
                raise ConfigError("system.inner_maps is required for case II")
            inner = [
                _build_map(m, dimension, f"system.inner_maps[{i}]", notes)
                for i, m in enumerate(sys_data["inner_maps"])
            ]
            system = case_ii_system(
                tuple(outer), tuple(p), tuple(inner), tuple(t)
            )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"system rejected: {exc}") from exc
    system = normalize(system)

    toggles = data.get("toggles", {})
    bracket = data.get("crossing_bracket")
    if bracket is not None:
        lo = _to_float(bracket[0], "crossing_bracket[0]", notes)
        hi = _to_float(bracket[1], "crossing_bracket[1]", notes)
        if not 0.0 < lo < hi:
            raise ConfigError(
                f"crossing_bracket must satisfy 0 < lo < hi, got [{lo}, {hi}]"
            )
        bracket = (lo, hi)

    r_list = tuple(
        _to_float(v, f"r_list[{i}]", notes)
        for i, v in enumerate(data.get("r_list", [2.0]))
    )
    if any(r <= 0.0 for r in r_list):
        raise ConfigError("r_list entries must be positive")

    return RunConfig(
        system=system,
        r_list=r_list,
        k_list=tuple(int(k) for k in data.get("k_list", [1, 10, 100])),
        n_list=tuple(
            int(n) for n in data.get("n_list", [2, 4, 8, 16, 32, 64])
        ),
        samples=int(data.get("samples", 20000)),
        restarts=int(data.get("restarts", 4)),
        seed=int(data["seed"]),
        out_dir=str(data.get("out_dir", "out")),
        psi_h0=bool(toggles.get("psi_h0", True)),
        aggregates_only=bool(toggles.get("aggregates_only", False)),
        warm_start=bool(toggles.get("warm_start", True)),
        crossing_bracket=bracket,
        rounding_notes=tuple(notes),
        source_path=source_path,
    )


def load_config(path: str) -> RunConfig:
    """Read and validate a JSON config file."""
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return config_from_dict(data, source_path=path)


def example_config_path(name: str) -> str:
    """Filesystem path of a bundled example config (by stem or filename)."""
    if not name.endswith(".json"):
        name = f"{name}.json"
    path = resources.files(__package__) / "configs" / name
    return str(path)
