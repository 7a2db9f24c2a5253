"""Convergence traces, parameter sweeps and timing runs.

Every number written here is recomputed through :mod:`coopisac.metrics`
on the final recovered state.

CSV schemas
-----------
``trace_N{N}_seed{S}.csv``
    iteration, objective_bits, max_residual, res_<family>..., min_rate_slack
``trace_N{N}_seed{S}_timing.csv``
    iteration, wall_time_ms
``sweep.csv``
    axis, value, seed, sum_rate, max_min_rmi, links, iterations, status, wall_time_s
``sweep_summary.csv``
    axis, value, seeds, sum_rate, max_min_rmi, links, wall_time_s (seed means)
``timing.csv``
    dimension, value, iterations, wall_time_s, wall_time_std_s, per_iter_ms, per_iter_std_ms
"""
from __future__ import annotations

import csv
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .admm import solve
from .channel import ChannelSet, Geometry, _pairs, _unpairs, dump_channels, generate_channels, load_channels
from .config import ExperimentConfig, grid_for
from .metrics import PrimalState, RateThresholds, check_feasibility, link_count, objective, sum_rate

SWEEP_COLUMNS = ("axis", "value", "seed", "sum_rate", "max_min_rmi", "links", "iterations", "status", "wall_time_s")
SUMMARY_COLUMNS = ("axis", "value", "seeds", "sum_rate", "max_min_rmi", "links", "wall_time_s")
TIMING_COLUMNS = ("dimension", "value", "iterations", "wall_time_s", "wall_time_std_s", "per_iter_ms", "per_iter_std_ms")


def point_config(cfg: ExperimentConfig, axis: str, value) -> ExperimentConfig:
    """The config of one sweep point."""
    if axis == "n":
        return replace(cfg, radio=replace(cfg.radio, grid=grid_for(int(value))))
    if axis == "pt":
        return replace(cfg, thresholds=replace(cfg.thresholds, P_t=float(value)))
    if axis == "m":
        g = cfg.geometry
        return replace(cfg, geometry=Geometry(g.bs_position, g.cue_positions, g.due_positions[: int(value)]))
    return cfg


def run_one(cfg: ExperimentConfig, seed: int):
    """Solve one seed; returns (channels, state, trace, wall seconds)."""
    channels = generate_channels(cfg.geometry, cfg.radio, seed)
    t0 = time.perf_counter()
    state, trace = solve(channels, cfg.thresholds, replace(cfg.solver, seed=seed))
    return channels, state, trace, time.perf_counter() - t0


def _map(fn, jobs, workers: int):
    if workers <= 1 or len(jobs) <= 1:
        return [fn(*j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*jobs)))


def _fmt(v) -> str:
    return repr(float(v)) if isinstance(v, (float, np.floating)) else str(v)


def _write_csv(path: Path, columns, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_fmt(r[c]) for c in columns])


# ---------------------------------------------------------------- results

def dump_result(path, channels: ChannelSet, state: PrimalState, thresholds: RateThresholds) -> None:
    """JSON with the channels, thresholds and final state (for ``check``)."""
    path = Path(path)
    chan_path = path.with_suffix(".channels.json")
    dump_channels(channels, chan_path)
    doc = {
        "channels": chan_path.name,
        "thresholds": {"R1": thresholds.R1, "R2": thresholds.R2, "R3": thresholds.R3, "P_t": thresholds.P_t},
        "state": {"W": _pairs(state.W), "F": _pairs(state.F), "c": state.c.tolist(), "p": state.p.tolist()},
    }
    path.write_text(json.dumps(doc))


def load_result(path):
    """Inverse of :func:`dump_result`: (channels, state, thresholds)."""
    path = Path(path)
    doc = json.loads(path.read_text())
    channels = load_channels(path.parent / doc["channels"])
    s = doc["state"]
    state = PrimalState(W=_unpairs(s["W"]), F=_unpairs(s["F"]), c=np.asarray(s["c"], float), p=np.asarray(s["p"], float))
    return channels, state, RateThresholds(**doc["thresholds"])


# ------------------------------------------------------------ convergence

def _converge_job(cfg: ExperimentConfig, N: int, seed: int, out: str):
    pc = point_config(cfg, "n", N) if N else cfg
    channels, state, trace, _ = run_one(pc, seed)
    stem = Path(out) / f"trace_N{pc.N}_seed{seed}"
    trace.to_csv(stem.with_suffix(".csv"))
    trace.to_timing_csv(Path(f"{stem}_timing.csv"))
    dump_result(Path(f"{stem}_state.json"), channels, state, pc.thresholds)
    return str(stem.with_suffix(".csv")), trace.status


def run_convergence(cfg: ExperimentConfig, out=None) -> list:
    """One trace CSV per (N, seed); the N list comes from an ``n`` sweep, if any.

    Returns ``[(path, status)]``. A run that hits ``max_iter`` is kept with
    status ``not_converged``.
    """
    out = Path(out or cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    Ns = [int(v) for v in cfg.values] if cfg.axis == "n" else [0]
    jobs = [(cfg, N, s, str(out)) for N in Ns for s in cfg.seeds]
    return sorted(_map(_converge_job, jobs, cfg.workers))


# ------------------------------------------------------------------ sweeps

def _sweep_job(cfg: ExperimentConfig, axis: str, value, seed: int):
    pc = point_config(cfg, axis, value)
    channels, state, trace, wall = run_one(pc, seed)
    return {
        "axis": axis, "value": value, "seed": seed,
        "sum_rate": sum_rate(channels, state), "max_min_rmi": objective(channels, state),
        "links": link_count(state), "iterations": len(trace.rows) - 1, "status": trace.status,
        "wall_time_s": wall,
    }


def summarize(rows) -> list:
    out = []
    for v in sorted({r["value"] for r in rows}):
        own = [r for r in rows if r["value"] == v]
        out.append({
            "axis": own[0]["axis"], "value": v, "seeds": len(own),
            **{c: float(np.mean([r[c] for r in own])) for c in ("sum_rate", "max_min_rmi", "links", "wall_time_s")},
        })
    return out


def run_sweep(cfg: ExperimentConfig, out=None, write: bool = True):
    """Rows for every (value, seed) plus seed means; writes both CSVs."""
    if cfg.axis == "none":
        values, axis = [cfg.N], "n"
    else:
        values, axis = list(cfg.values), cfg.axis
    jobs = [(cfg, axis, v, s) for v in values for s in cfg.seeds]
    rows = sorted(_map(_sweep_job, jobs, cfg.workers), key=lambda r: (r["value"], r["seed"]))
    summary = summarize(rows)
    if write:
        out = Path(out or cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "sweep.csv", SWEEP_COLUMNS, rows)
        _write_csv(out / "sweep_summary.csv", SUMMARY_COLUMNS, summary)
        (out / "sweep.gp").write_text(_gnuplot(axis))
    return rows, summary


def _gnuplot(axis: str) -> str:
    label = "transmissive elements N" if axis == "n" else "per-element power P_t (W)"
    return (
        "set datafile separator ','\n"
        "set key autotitle columnhead\n"
        f"set xlabel '{label}'\n"
        "set multiplot layout 1,3\n"
        "plot 'sweep_summary.csv' using 2:4 with linespoints\n"
        "plot 'sweep_summary.csv' using 2:5 with linespoints\n"
        "plot 'sweep_summary.csv' using 2:6 with linespoints\n"
        "unset multiplot\n"
    )


# ------------------------------------------------------------------ timing

def _time_point(cfg: ExperimentConfig, dimension: str, value, seed: int, repeats: int, warmup: int):
    pc = point_config(cfg, dimension, value)
    channels = generate_channels(pc.geometry, pc.radio, seed)
    solver_cfg = replace(pc.solver, seed=seed)
    walls, per_iter, iters = [], [], 0
    for i in range(warmup + repeats):
        t0 = time.perf_counter()
        _, trace = solve(channels, pc.thresholds, solver_cfg)
        wall = time.perf_counter() - t0
        if i < warmup:
            continue
        iters = len(trace.rows) - 1
        walls.append(wall)
        per_iter.append(1e3 * wall / max(iters, 1))
    return {
        "dimension": dimension, "value": value, "iterations": iters,
        "wall_time_s": float(np.mean(walls)), "wall_time_std_s": float(np.std(walls)),
        "per_iter_ms": float(np.mean(per_iter)), "per_iter_std_ms": float(np.std(per_iter)),
    }


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log(ys) against log(xs)."""
    return float(np.polyfit(np.log(np.asarray(xs, float)), np.log(np.asarray(ys, float)), 1)[0])


def run_timing(cfg: ExperimentConfig, out=None, write: bool = True):
    """Wall and per-iteration time against N and M (warmup runs excluded).

    Runs serially so the timings are single-threaded. Returns the rows and
    a summary with the log-log slopes.
    """
    seed = cfg.seeds[0]
    tm = cfg.timing
    rows = [_time_point(cfg, "n", v, seed, tm.repeats, tm.warmup) for v in tm.values]
    rows += [_time_point(cfg, "m", v, seed, tm.repeats, tm.warmup) for v in tm.m_values]
    n_rows = [r for r in rows if r["dimension"] == "n"]
    summary = {"seed": seed, "slope_per_iter_vs_N": None, "slope_per_iter_vs_M": None}
    if len(n_rows) > 1:
        summary["slope_per_iter_vs_N"] = loglog_slope([r["value"] for r in n_rows], [r["per_iter_ms"] for r in n_rows])
    m_rows = [r for r in rows if r["dimension"] == "m"]
    if len(m_rows) > 1:
        summary["slope_per_iter_vs_M"] = loglog_slope([r["value"] for r in m_rows], [r["per_iter_ms"] for r in m_rows])
    if write:
        out = Path(out or cfg.out)
        out.mkdir(parents=True, exist_ok=True)
        _write_csv(out / "timing.csv", TIMING_COLUMNS, rows)
        (out / "timing_summary.json").write_text(json.dumps(summary, indent=1))
    return rows, summary


def check_state(path) -> tuple[bool, str]:
    """Feasibility report of a dumped result as (feasible, JSON)."""
    channels, state, thresholds = load_result(path)
    rep = check_feasibility(channels, state, thresholds)
    return rep.satisfied, rep.to_json()
