"""Experiment configuration: a YAML file with four optional sections.

Schema (every key optional, defaults are the reference scenario)::

    scenario:
      bs_position: [0, 0, 50]          # metres
      cue_positions: [[x, y, z], ...]  # K rows
      due_positions: [[x, y, z], ...]  # M rows
      grid: [4, 4]                     # N_r x N_c transmissive elements
      carrier_ghz: 3.0
      bandwidth_mhz: 20                # informational, noise is given directly
      noise_dbm: -90                   # scalar, or {cue: .., due: .., sense: ..}
      rician_factor: 10
      rcs: 1.0
    thresholds: {R1: 0.1, R2: 0.1, R3: 0.1, P_t: 1.0}   # bits/s/Hz and W
    solver: {rho: 1.0, max_iter: 100, ...}              # SolverConfig fields
    sweep: {axis: none, values: []}                     # axis: none | n | pt
    timing: {values: [16, 36, 64], m_values: [1, 3, 5], repeats: 3, warmup: 1}
    seeds: [0]
    out: results
    workers: 1
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .admm.state import SolverConfig
from .channel import Geometry, RadioParams, dbm_to_watts
from .metrics import RateThresholds

AXES = ("none", "n", "pt")


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending field."""


@dataclass(frozen=True)
class TimingConfig:
    values: tuple = (16, 36, 64)
    m_values: tuple = (1, 3, 5)
    repeats: int = 3
    warmup: int = 1


@dataclass(frozen=True)
class ExperimentConfig:
    geometry: Geometry = field(default_factory=Geometry.default)
    radio: RadioParams = field(default_factory=RadioParams)
    thresholds: RateThresholds = field(default_factory=RateThresholds)
    solver: SolverConfig = field(default_factory=SolverConfig)
    axis: str = "none"
    values: tuple = ()
    seeds: tuple = (0,)
    out: str = "results"
    workers: int = 1
    timing: TimingConfig = field(default_factory=TimingConfig)

    def __post_init__(self):
        if self.axis not in AXES:
            raise ConfigError(f"sweep.axis must be one of {AXES}")
        if self.axis != "none" and not self.values:
            raise ConfigError("sweep.values must be nonempty when sweep.axis is set")
        if not self.seeds:
            raise ConfigError("seeds must be nonempty")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.geometry.K < 1 or self.geometry.M < 1:
            raise ConfigError("scenario needs at least one CUE and one DUE")

    @property
    def N(self) -> int:
        return self.radio.N

    def with_seeds(self, seeds) -> "ExperimentConfig":
        return replace(self, seeds=tuple(int(s) for s in seeds))

    def with_sweep(self, axis: str, values) -> "ExperimentConfig":
        return replace(self, axis=axis, values=tuple(values))


def grid_for(N: int) -> tuple[int, int]:
    """Most square (N_r, N_c) factorization of N."""
    if N < 1:
        raise ConfigError("sweep.values: element counts must be >= 1")
    r = int(math.isqrt(N))
    while N % r:
        r -= 1
    return (N // r, r) if N // r < r else (r, N // r)


def _noise(value, where: str) -> dict:
    keys = ("cue", "due", "sense")
    if isinstance(value, dict):
        unknown = set(value) - set(keys)
        if unknown:
            raise ConfigError(f"{where} has unknown keys {sorted(unknown)}")
        return {k: dbm_to_watts(float(value.get(k, -90.0))) for k in keys}
    return {k: dbm_to_watts(float(value)) for k in keys}


def _section(doc: dict, name: str) -> dict:
    sec = doc.get(name) or {}
    if not isinstance(sec, dict):
        raise ConfigError(f"{name} must be a mapping")
    return sec


def _check_keys(sec: dict, allowed, where: str) -> None:
    unknown = set(sec) - set(allowed)
    if unknown:
        raise ConfigError(f"{where} has unknown keys {sorted(unknown)}")


def _wrap(where: str, build):
    try:
        return build()
    except ConfigError:
        raise
    except (ValueError, TypeError) as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith(where + ".") else f"{where}: {msg}") from exc


def from_dict(doc: dict | None) -> ExperimentConfig:
    """Validate a parsed document and fill in defaults."""
    doc = doc or {}
    if not isinstance(doc, dict):
        raise ConfigError("top level must be a mapping")
    _check_keys(doc, ("scenario", "thresholds", "solver", "sweep", "timing", "seeds", "out", "workers"), "config")

    sc = _section(doc, "scenario")
    _check_keys(sc, ("bs_position", "cue_positions", "due_positions", "grid", "carrier_ghz",
                     "bandwidth_mhz", "noise_dbm", "rician_factor", "rcs"), "scenario")
    base = Geometry.default()
    geometry = _wrap("scenario", lambda: Geometry(
        bs_position=sc.get("bs_position", base.bs_position),
        cue_positions=sc.get("cue_positions", base.cue_positions),
        due_positions=sc.get("due_positions", base.due_positions),
    ))
    noise = _noise(sc.get("noise_dbm", -90.0), "scenario.noise_dbm")
    radio = _wrap("scenario", lambda: RadioParams(
        carrier_freq=float(sc.get("carrier_ghz", 3.0)) * 1e9,
        rician_factor=float(sc.get("rician_factor", 10.0)),
        rcs=float(sc.get("rcs", 1.0)),
        noise_cue=noise["cue"], noise_due=noise["due"], noise_sense=noise["sense"],
        grid=tuple(sc.get("grid", (4, 4))),
    ))

    th = _section(doc, "thresholds")
    _check_keys(th, ("R1", "R2", "R3", "P_t"), "thresholds")
    thresholds = _wrap("thresholds", lambda: RateThresholds(**{k: float(v) for k, v in th.items()}))

    so = _section(doc, "solver")
    _check_keys(so, [f.name for f in fields(SolverConfig)], "solver")
    solver = _wrap("solver", lambda: SolverConfig(**so))

    sw = _section(doc, "sweep")
    _check_keys(sw, ("axis", "values"), "sweep")
    axis = str(sw.get("axis", "none")).lower()
    values = tuple(sw.get("values") or ())

    tm = _section(doc, "timing")
    _check_keys(tm, [f.name for f in fields(TimingConfig)], "timing")
    timing = TimingConfig(**{k: tuple(v) if isinstance(v, list) else int(v) for k, v in tm.items()})
    if not timing.values or timing.repeats < 1 or timing.warmup < 0:
        raise ConfigError("timing.values must be nonempty, timing.repeats >= 1 and timing.warmup >= 0")

    seeds = doc.get("seeds", [0])
    seeds = tuple(int(s) for s in (seeds if isinstance(seeds, (list, tuple)) else [seeds]))
    cfg = ExperimentConfig(
        geometry=geometry, radio=radio, thresholds=thresholds, solver=solver,
        axis=axis, values=values, seeds=seeds, out=str(doc.get("out", "results")),
        workers=int(doc.get("workers", 1)), timing=timing,
    )
    validate_values(cfg.axis, cfg.values)
    return cfg


def validate_values(axis: str, values) -> None:
    for v in values:
        if axis == "n" and (int(v) != v or v < 1):
            raise ConfigError("sweep.values: element counts must be positive integers")
        if axis == "pt" and not (np.isfinite(v) and v > 0):
            raise ConfigError("sweep.values: powers must be positive")


def load_config(path=None) -> ExperimentConfig:
    """Read and validate a YAML file; ``None`` gives the default config."""
    if path is None:
        return from_dict({})
    text = Path(path).read_text()
    try:
        doc = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"cannot parse {path}{where}: {getattr(exc, 'problem', exc)}") from exc
    return from_dict(doc)
