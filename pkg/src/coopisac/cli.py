"""Command line entry point: ``coopisac {converge,sweep,timing,verify,check}``.

Exit codes: 0 success, 1 infeasible state (``check``), 2 invalid
configuration or arguments, 3 oracle-suite failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

from . import experiments, oracle
from .config import ConfigError, load_config, validate_values

EXIT_OK, EXIT_INFEASIBLE, EXIT_INVALID, EXIT_ORACLE = 0, 1, 2, 3


def _values(text: str) -> list:
    try:
        return [float(v) if "." in v or "e" in v.lower() else int(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise ConfigError(f"--values: cannot parse {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML experiment config (default: reference scenario)")
    common.add_argument("--seed", type=int, help="run this single seed instead of the configured list")
    common.add_argument("--out", help="output directory")
    common.add_argument("--axis", choices=("n", "pt"), help="sweep axis: element count or per-element power")
    common.add_argument("--values", help="comma-separated sweep values, e.g. 16,36,64")
    common.add_argument("--workers", type=int, help="parallel worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="coopisac", description="Distributed cooperative ISAC solver and benchmarks.")
    sub = ap.add_subparsers(dest="command", required=True)
    sub.add_parser("converge", parents=[common], help="write convergence traces, one per (N, seed)")
    sub.add_parser("sweep", parents=[common], help="sum-rate, max-min RMI and link count over N or P_t")
    sub.add_parser("timing", parents=[common], help="wall and per-iteration time against N and M")
    v = sub.add_parser("verify", parents=[common], help="run the closed-form stationarity suite")
    v.add_argument("--cases", type=int, default=5, help="random instances per update")
    c = sub.add_parser("check", parents=[common], help="feasibility report of a dumped state")
    c.add_argument("state", help="*_state.json written by converge")
    return ap


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seeds([args.seed])
    if args.axis or args.values:
        if not (args.axis and args.values):
            raise ConfigError("--axis and --values go together")
        vals = _values(args.values)
        if not vals:
            raise ConfigError("sweep.values must be nonempty")
        validate_values(args.axis, vals)
        cfg = cfg.with_sweep(args.axis, vals)
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigError("workers must be >= 1")
        cfg = replace(cfg, workers=args.workers)
    if args.out:
        cfg = replace(cfg, out=args.out)
    return cfg


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        cfg = _config(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID

    out = Path(cfg.out)
    if args.command == "converge":
        for path, status in experiments.run_convergence(cfg, out):
            print(f"{path}  {status}")
    elif args.command == "sweep":
        _, summary = experiments.run_sweep(cfg, out)
        print("value  seeds  sum_rate  max_min_rmi  links")
        for r in summary:
            print(f"{r['value']:>5}  {r['seeds']:>5}  {r['sum_rate']:8.3f}  {r['max_min_rmi']:11.3f}  {r['links']:5.1f}")
    elif args.command == "timing":
        rows, summary = experiments.run_timing(cfg, out)
        for r in rows:
            print(f"{r['dimension']}={r['value']:<4} iters={r['iterations']:<4} "
                  f"wall={r['wall_time_s']:.3f}s per_iter={r['per_iter_ms']:.2f}ms")
        print(json.dumps(summary))
    elif args.command == "verify":
        res = oracle.run_suite(args.cases, cfg.seeds[0])
        out.mkdir(parents=True, exist_ok=True)
        (out / "verification.json").write_text(oracle.report_json(res))
        print(oracle.summary(res))
        if not oracle.suite_passed(res):
            return EXIT_ORACLE
    elif args.command == "check":
        try:
            ok, report = experiments.check_state(args.state)
        except (OSError, KeyError, ValueError) as exc:
            print(f"error: cannot read {args.state}: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(report)
        if not ok:
            return EXIT_INFEASIBLE
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
