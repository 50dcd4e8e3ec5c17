"""
``key = value`` run configuration for the simulators.

Lines starting with ``#`` and trailing ``# ...`` comments are ignored.
Unknown keys, duplicates and malformed values raise :class:`InputError`
naming the offending line.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from ..dmd import SnapshotMatrix
from ..errors import InputError
from .am import AmParams, run_am
from .grid import Boundary, Grid
from .sird import SirdParams, initial_state, run_sird

COMMON = {"model": str, "steps": int, "output_stride": int, "seed": int}
GRID = {"nx": int, "ny": int, "hx": float, "hy": float, **{f"bc_{e}": str for e in ("left", "right", "bottom", "top")}}
SIRD = {
    **{k: float for k in ("beta_i", "beta_e", "gamma", "delta", "nu_s", "nu_i", "nu_r", "sigma", "dt")},
    **{k: float for k in ("pop_density", "pop_variation", "i0_fraction", "i0_center_x", "i0_center_y", "i0_width")},
}
AM = {
    k: float
    for k in (
        "rho", "c_p", "kappa", "t_s", "t_f", "laser_amp", "laser_center_x", "laser_center_y",
        "laser_scale", "laser_off_time", "sigmoid_sharpness", "rate_sharpness", "t_boundary", "dt",
    )
}
KEYS = {"sird": {**COMMON, **GRID, **SIRD}, "am": {**COMMON, **GRID, **AM}}

SIRD_DEFAULT_GRID = {"nx": 32, "ny": 1, "hx": 1.0, "hy": 1.0}
AM_DEFAULT_GRID = {"nx": 50, "ny": 50, "hx": 0.04 / 50, "hy": 0.04 / 50}


@dataclass(frozen=True)
class RunConfig:
    model: str
    values: dict
    lines: dict

    def get(self, key, default=None):
        return self.values.get(key, default)


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    raw, lines = {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise InputError(f"{source}:{lineno}: expected 'key = value', got {line!r}")
        if key in raw:
            raise InputError(f"{source}:{lineno}: duplicate key {key!r} (first set on line {lines[key]})")
        raw[key], lines[key] = value, lineno
    model = raw.get("model")
    if model not in KEYS:
        where = f"{source}:{lines['model']}" if "model" in lines else source
        raise InputError(f"{where}: model must be 'sird' or 'am', got {model!r}")
    allowed = KEYS[model]
    values = {}
    for key, value in raw.items():
        if key not in allowed:
            raise InputError(f"{source}:{lines[key]}: unknown key {key!r} for model {model}")
        try:
            values[key] = allowed[key](value)
        except ValueError:
            raise InputError(f"{source}:{lines[key]}: {key} expects {allowed[key].__name__}, got {value!r}") from None
        if key.startswith("bc_"):
            try:
                Boundary.parse(value)
            except InputError as exc:
                raise InputError(f"{source}:{lines[key]}: {exc}") from None
    if "steps" not in values:
        raise InputError(f"{source}: missing required key 'steps'")
    return RunConfig(model, values, lines)


def read_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), str(path))


def _pick(cfg: RunConfig, table) -> dict:
    return {k: cfg.values[k] for k in table if k in cfg.values}


def build_grid(cfg: RunConfig) -> Grid:
    defaults = SIRD_DEFAULT_GRID if cfg.model == "sird" else AM_DEFAULT_GRID
    dims = {**defaults, **_pick(cfg, ("nx", "ny", "hx", "hy"))}
    edges = {e: cfg.values[f"bc_{e}"] for e in ("left", "right", "bottom", "top") if f"bc_{e}" in cfg.values}
    if cfg.model == "am":
        edges.setdefault("bottom", f"fixed:{cfg.get('t_boundary', AmParams.t_boundary)}")
    return Grid.make(dims["nx"], dims["ny"], dims["hx"], dims["hy"], **edges)


def run_from_config(cfg: RunConfig) -> tuple[SnapshotMatrix, Grid]:
    grid = build_grid(cfg)
    steps = cfg.values["steps"]
    stride = cfg.get("output_stride", 1)
    if cfg.model == "sird":
        params = SirdParams(**_pick(cfg, ("beta_i", "beta_e", "gamma", "delta", "nu_s", "nu_i", "nu_r", "sigma", "dt")))
        init = initial_state(
            grid,
            pop_density=cfg.get("pop_density", 100.0),
            pop_variation=cfg.get("pop_variation", 0.0),
            i0_fraction=cfg.get("i0_fraction", 0.01),
            i0_center=(cfg.get("i0_center_x", 0.3), cfg.get("i0_center_y", 0.5)),
            i0_width=cfg.get("i0_width", 0.1),
            seed=cfg.get("seed", 0),
        )
        return run_sird(grid, params, init, steps, stride), grid
    kw = _pick(cfg, AM)
    cx = kw.pop("laser_center_x", AmParams.laser_center[0])
    cy = kw.pop("laser_center_y", AmParams.laser_center[1])
    params = AmParams(laser_center=(cx, cy), **kw)
    if grid.is_1d:
        raise InputError("the am model needs ny >= 2")
    return run_am(grid, params, steps, stride), grid
