"""Command line: ``run``, ``reproduce`` and ``validate``.

Exit codes: 0 success, 1 invalid configuration, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
import time
from pathlib import Path

import numpy as np

from .config import BUILTIN_TARGETS, ConfigError, builtin_config, load_config
from .harness import ExperimentConfig, default_workers, sweep
from .results import ResultRow, write_rows

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2

log = logging.getLogger("uniform_extremes")


def execute(config: ExperimentConfig, workers: int | None = None, timing: bool = False) -> list[ResultRow]:
    start = time.perf_counter()
    table = sweep(config, workers)
    elapsed = time.perf_counter() - start
    rows = []
    for entry in table:
        params = dict(entry.params)
        params.setdefault("b", config.b)
        s = entry.summary
        rows.append(ResultRow(
            experiment=config.experiment, params=params, est=s.est, sd=s.sd, cv=s.cv, se=s.se,
            theoretical=entry.theoretical, n=s.n, seed=config.seed, n_errors=s.n_errors,
            wall_time_seconds=elapsed if timing else None,
        ))
    return rows


def _emit(rows, out: Path, fmt: str | None, plot: bool, title: str | None = None):
    from .plotting import plot_sweep, sweep_parameter

    write_rows(rows, out, fmt)
    log.info("wrote %d rows to %s", len(rows), out)
    if plot:
        param = sweep_parameter([ResultRow(r.experiment, {k: v for k, v in r.params.items() if k != "b"},
                                           r.est, r.sd, r.cv, r.se, r.theoretical, r.n, r.seed) for r in rows])
        if param is None:
            log.warning("no single swept parameter; skipping figure")
            return
        fig = plot_sweep(rows, out.with_suffix(".png"), param, title)
        log.info("wrote figure %s", fig)


def validation_report(config: ExperimentConfig) -> list[tuple[str, bool, str]]:
    checks = []
    points = config.field().points
    for k, trend in enumerate(config.trends):
        msgs = trend.violations(points, config.bounds)
        checks.append((f"trend[{k}] class membership {trend.label}", not msgs, "; ".join(msgs)))
    delta = config.a / config.b if config.b > 0 else float("nan")
    limit = config.bounds.mu_u + delta
    checks.append((f"b > mu_u + delta_b ({config.b:g} > {limit:.6g})", config.b > limit,
                   "" if config.b > limit else "threshold not in the rare-event regime"))
    if config.estimator == "uniform" and config.b > limit:
        try:
            config.priors()
            ok, msg = True, ""
        except ValueError as exc:
            ok, msg = False, str(exc)
        checks.append(("mixture priors normalised and finite", ok, msg))
    if config.estimator == "abl09":
        ok = config.design is not None and bool(np.all(config.design.on(points)[0] > 0))
        checks.append(("design trend has positive sigma", ok, "" if ok else "design sigma must be positive"))
    return checks


def cmd_run(args) -> int:
    config = load_config(args.config)
    problems = config.problems()
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_INVALID
    rows = execute(config, args.workers, args.timing)
    _emit(rows, Path(args.out), args.format, args.plot)
    return EXIT_OK


def cmd_reproduce(args) -> int:
    config = builtin_config(args.table)
    if args.seed is not None:
        config.seed = args.seed
    if args.n is not None:
        config.n = args.n
    rows = execute(config, args.workers, args.timing)
    plot = args.table.startswith("fig") and not args.no_plot
    _emit(rows, Path(args.out), args.format, plot, title=config.experiment)
    return EXIT_OK


def cmd_validate(args) -> int:
    config = load_config(args.config)
    checks = validation_report(config)
    for name, ok, msg in checks:
        print(f"{'PASS' if ok else 'FAIL'}  {name}" + (f"  -- {msg}" if msg else ""))
    return EXIT_OK if all(ok for _, ok, _ in checks) else EXIT_INVALID


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="uniform-extremes",
        description="Importance sampling of supremum exceedance probabilities of Gaussian fields.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output file (.csv or .json)")
        p.add_argument("--format", choices=("csv", "json"), default=None,
                       help="output format; defaults to the file suffix")
        p.add_argument("--workers", type=int, default=None,
                       help="worker processes (default: $UNIFORM_EXTREMES_WORKERS or 1)")
        p.add_argument("--timing", action="store_true",
                       help="add a wall_time_seconds column (output is then not reproducible byte for byte)")

    p = sub.add_parser("run", help="run an experiment file")
    p.add_argument("--config", required=True)
    p.add_argument("--plot", action="store_true", help="also write a PNG of a one-parameter sweep")
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("reproduce", help="rerun a built-in table or figure experiment")
    p.add_argument("--table", required=True, choices=[*BUILTIN_TARGETS, "table1", "table2", "table3", "table4"])
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--n", type=int, default=None, help="override the number of replicates")
    p.add_argument("--no-plot", action="store_true")
    common(p)
    p.set_defaults(func=cmd_reproduce)

    p = sub.add_parser("validate", help="check an experiment file without running it")
    p.add_argument("--config", required=True)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "workers", None) is None and hasattr(args, "workers"):
        args.workers = default_workers()
    if getattr(args, "table", "").startswith("table"):
        args.table = args.table[len("table"):]
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (OSError, ValueError, ArithmeticError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
