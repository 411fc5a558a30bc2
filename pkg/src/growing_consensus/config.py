"""Scenario files: TOML, validated against a JSON schema before anything runs."""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import inflow
from .growth import GrowthRate
from .kernels import make_kernel
from .micro import SimConfig

_num = {"type": "number"}
_vec = {"oneOf": [_num, {"type": "array", "items": _num, "minItems": 1}]}
_rows = {"type": "array", "items": {"type": "array", "items": _num, "minItems": 2}, "minItems": 1}


def _obj(props: dict, required=()) -> dict:
    return {"type": "object", "properties": props, "required": list(required), "additionalProperties": False}


SCHEMA = _obj({
    "name": {"type": "string"},
    "description": {"type": "string"},
    "mode": {"enum": ["micro", "kinetic", "both"]},
    "dim": {"type": "integer", "minimum": 1, "maximum": 3},
    "growth": {"oneOf": [
        _obj({"kind": {"const": "constant"}, "value": _num}, ["kind", "value"]),
        _obj({"kind": {"const": "power_decay"}, "alpha": _num}, ["kind", "alpha"]),
        _obj({"kind": {"const": "table"}, "points": _rows}, ["kind", "points"]),
    ]},
    "kernel": {"oneOf": [
        _obj({"kind": {"const": "type1_constant"}, "value": _num}, ["kind"]),
        _obj({"kind": {"const": "type1_exponential"}, "lambda": _num}, ["kind"]),
        _obj({"kind": {"enum": ["type2_tent", "type2_bump"]}}, ["kind"]),
        _obj({"kind": {"const": "table"}, "points": _rows, "lipschitz": _num}, ["kind", "points"]),
    ]},
    "inflow": {"oneOf": [
        _obj({"kind": {"const": "constant"}, "value": _vec, "x_bound": _num}, ["kind", "value"]),
        _obj({"kind": {"const": "eventually_constant"}, "value": _vec, "t0": _num, "start": _vec,
              "x_bound": _num}, ["kind", "value", "t0"]),
        _obj({"kind": {"const": "sinusoidal"}, "amplitude": _vec, "frequency": _num, "phase": _num,
              "x_bound": _num}, ["kind"]),
        _obj({"kind": {"const": "population_power"}, "c": _vec, "C": _vec, "eps": _num, "n_min": _num,
              "x_bound": _num}, ["kind"]),
        _obj({"kind": {"const": "table"}, "points": _rows, "x_bound": _num}, ["kind", "points"]),
    ]},
    "initial": {"oneOf": [
        _obj({"kind": {"const": "uniform"}, "low": _vec, "high": _vec,
              "sampling": {"enum": ["random", "quantile"]}}, ["kind"]),
        _obj({"kind": {"const": "two_blob"}, "centers": {"type": "array", "items": _vec, "minItems": 2, "maxItems": 2},
              "width": _num, "fraction": _num, "sampling": {"enum": ["random", "quantile"]}}, ["kind", "centers"]),
        _obj({"kind": {"const": "table"}, "points": _rows}, ["kind", "points"]),
        _obj({"kind": {"const": "explicit"}, "positions": {"type": "array", "items": _vec}}, ["kind", "positions"]),
    ]},
    "numerics": _obj({
        "N0": {"type": "number", "exclusiveMinimum": 0},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "t_end": {"type": "number", "minimum": 0},
        "rho": {"type": "number", "minimum": 1},
        "seed": {"type": "integer"},
        "snapshot_stride": {"type": "integer", "minimum": 1},
        "integrator": {"enum": ["euler", "rk4"]},
        "M_max": {"type": "number", "minimum": 1},
        "w_min": {"type": "number", "exclusiveMinimum": 0},
        "method": {"enum": ["auto", "dense", "constant", "sorted1d", "binned"]},
    }, ["dt", "t_end"]),
    "outputs": _obj({
        "trajectory": {"type": "string"},
        "summary": {"type": "string"},
        "snapshots": {"type": "boolean"},
        "measure_dump": {"type": "boolean"},
    }),
    "checks": _obj({
        "link_radius": {"type": "number", "exclusiveMinimum": 0},
        "c1_window": {"type": "number", "exclusiveMinimum": 0},
        "c1_tol": {"type": "number", "exclusiveMinimum": 0},
    }),
}, ["growth", "kernel", "inflow", "initial", "numerics"])


class ConfigError(ValueError):
    """Scenario file is unreadable or fails validation."""


@dataclass
class Scenario:
    name: str
    mode: str
    sim: SimConfig
    raw: dict
    w_min: float = 1e-8
    link_radius: float = 0.5
    c1_window: float = 6.283185307179586
    c1_tol: float = 0.1
    trajectory_name: str = "trajectory.csv"
    summary_name: str = "summary.json"
    write_snapshots: bool = False
    measure_dump: bool = False


def bundled_dir() -> Path:
    return Path(str(resources.files("growing_consensus") / "scenarios"))


def bundled_scenarios() -> list[Path]:
    return sorted(bundled_dir().glob("*.toml"))


def resolve(path_or_name: str) -> Path:
    """A file path, or the name of a bundled scenario (with or without .toml)."""
    p = Path(path_or_name)
    if p.exists():
        return p
    name = p.name if p.suffix == ".toml" else p.name + ".toml"
    q = bundled_dir() / name
    if q.exists():
        return q
    raise ConfigError(f"no scenario file or bundled scenario named {path_or_name!r}")


def load_raw(path_or_name: str) -> dict:
    p = resolve(path_or_name)
    try:
        with open(p, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"{p}: {exc}") from exc
    raw.setdefault("name", p.stem)
    return raw


def from_dict(raw: dict) -> Scenario:
    try:
        jsonschema.validate(raw, SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(x) for x in exc.absolute_path) or "<root>"
        raise ConfigError(f"invalid scenario at {where}: {exc.message}") from exc
    raw = copy.deepcopy(raw)
    dim = int(raw.get("dim", 1))
    num = raw["numerics"]
    g = raw["growth"]
    try:
        if g["kind"] == "constant":
            rate = GrowthRate.constant(g["value"])
        elif g["kind"] == "power_decay":
            rate = GrowthRate.power_decay(g["alpha"])
        else:
            rate = GrowthRate.table(g["points"])
        sim = SimConfig(
            kernel=make_kernel(raw["kernel"]), rate=rate, profile=inflow.make_profile(raw["inflow"], dim),
            N0=float(num.get("N0", 1.0)), dt=float(num["dt"]), t_end=float(num["t_end"]),
            rho=float(num.get("rho", 100.0)), dim=dim, initial=raw["initial"],
            integrator=num.get("integrator", "rk4"), snapshot_stride=int(num.get("snapshot_stride", 1)),
            seed=int(num.get("seed", 0)), M_max=float(num.get("M_max", 200_000)),
            method=num.get("method", "auto"), record_snapshots=bool(raw.get("outputs", {}).get("snapshots", False)),
            name=raw.get("name", ""),
        )
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"invalid scenario: {exc}") from exc
    out = raw.get("outputs", {})
    chk = raw.get("checks", {})
    return Scenario(
        name=raw.get("name", ""), mode=raw.get("mode", "micro"), sim=sim, raw=raw,
        w_min=float(num.get("w_min", 1e-8)), link_radius=float(chk.get("link_radius", 0.5)),
        c1_window=float(chk.get("c1_window", 6.283185307179586)), c1_tol=float(chk.get("c1_tol", 0.1)),
        trajectory_name=out.get("trajectory", "trajectory.csv"), summary_name=out.get("summary", "summary.json"),
        write_snapshots=bool(out.get("snapshots", False)), measure_dump=bool(out.get("measure_dump", False)),
    )


def load(path_or_name: str, seed: int | None = None) -> Scenario:
    raw = load_raw(path_or_name)
    if seed is not None:
        raw.setdefault("numerics", {})["seed"] = int(seed)
    return from_dict(raw)


def set_path(raw: dict, dotted: str, value) -> dict:
    """Copy of ``raw`` with the dotted key (e.g. ``growth.alpha``) replaced."""
    out = copy.deepcopy(raw)
    keys = dotted.split(".")
    node = out
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise ConfigError(f"{dotted!r} does not address a table in the scenario")
        node = node[k]
    node[keys[-1]] = value
    return out
