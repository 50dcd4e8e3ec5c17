"""
Command-line pipeline: simulate -> fit -> reconstruct -> diagnose.

Exit codes: 0 success, 2 bad input, 3 numerical failure, 4 a diagnostic
verdict failed.
"""

from __future__ import annotations

import argparse
import math
import sys
import warnings
from pathlib import Path

import numpy as np

from .diagnostics import diagnose, mass_series
from .dmd import (
    EXACT,
    CompartmentLayout,
    Randomized,
    SnapshotMatrix,
    evaluate_continuous,
    evaluate_discrete,
    fit,
    fit_uncoupled,
)
from .errors import BranchWarning, InputError, NumericError
from .fileio import fmt, read_model, read_snapshots, write_model, write_snapshots
from .simulate.config import read_config, run_from_config

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_VERDICT = 0, 2, 3, 4
GRID_TOL = 1e-9


def cmd_simulate(args) -> int:
    cfg = read_config(args.config)
    if args.seed is not None:
        cfg.values["seed"] = args.seed
    y, grid = run_from_config(cfg)
    write_snapshots(args.out, y)
    print(f"nodes={grid.nodes} columns={y.columns} mass0={fmt(mass_series(y)[0])}")
    return EXIT_OK


def _backend(args):
    if not args.randomized:
        return EXACT
    return Randomized(seed=args.seed or 0, oversample=args.oversample, power_iters=args.power_iters)


def _rank(text: str, y: SnapshotMatrix) -> int:
    if text == "full":
        return min(y.layout.state_dim, y.columns - 1)
    try:
        return int(text)
    except ValueError:
        raise InputError(f"--rank must be an integer or 'full', got {text!r}") from None


def _suffixed(path: Path, name: str) -> Path:
    return path.with_name(f"{path.stem}.{name}{path.suffix}")


def cmd_fit(args) -> int:
    y, _ = read_snapshots(args.snapshots)
    if not 0 < args.train_fraction <= 1:
        raise InputError(f"--train-fraction must lie in (0, 1], got {args.train_fraction}")
    columns = math.ceil(args.train_fraction * y.columns - 1e-9)
    train = y.head(columns)
    backend = _backend(args)
    out = Path(args.out)
    if args.mode == "coupled":
        model = fit(train, _rank(args.rank, train), backend)
        write_model(out, model)
        print(f"train_columns={columns} rank={model.rank} residual={fmt(model.fit_details.training_residual)}")
        return EXIT_OK
    parts = train.split()
    models = fit_uncoupled(parts, _rank(args.rank, parts[0]), backend)
    for part, model in zip(parts, models):
        path = _suffixed(out, part.layout.names[0])
        write_model(path, model)
        print(
            f"{part.layout.names[0]}: file={path} train_columns={columns} rank={model.rank} "
            f"residual={fmt(model.fit_details.training_residual)}"
        )
    return EXIT_OK


def _time_grid(start: float, end: float, step: float) -> np.ndarray:
    if not step > 0:
        raise InputError(f"--t-step must be positive, got {step}")
    if start < 0 or end < start:
        raise InputError(f"need 0 <= t_start <= t_end, got {start}, {end}")
    count = int(math.floor((end - start) / step + GRID_TOL)) + 1
    return start + step * np.arange(count)


def _evaluate(model, times: np.ndarray) -> np.ndarray:
    """Discrete powers at whole output steps, the continuous expansion elsewhere."""
    steps = times / model.dt
    whole = np.abs(steps - np.round(steps)) <= GRID_TOL * np.maximum(1.0, steps)
    out = np.empty((model.layout.state_dim, times.size))
    if whole.any():
        out[:, whole] = evaluate_discrete(model, np.round(steps[whole]).astype(int)).real
    if (~whole).any():
        out[:, ~whole] = evaluate_continuous(model, times[~whole]).real
    return out


def cmd_reconstruct(args) -> int:
    models = [read_model(p) for p in args.model]
    first = models[0]
    names = [n for m in models for n in m.layout.names]
    if len(set(names)) != len(names):
        raise InputError(f"models repeat compartments: {names}")
    for m in models[1:]:
        if m.layout.node_count != first.layout.node_count or m.dt != first.dt or m.cell_weight != first.cell_weight:
            raise InputError("models disagree on node count, dt or cell weight")
    times = _time_grid(args.t_start, args.t_end, args.t_step)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BranchWarning)
        data = np.vstack([_evaluate(m, times) for m in models])
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    train_end = min(m.train_end for m in models)
    extrapolated = times > train_end * (1 + GRID_TOL)
    meta = {
        "t_start": fmt(times[0]),
        "extrapolated": "true" if extrapolated.any() else "false",
    }
    if extrapolated.any():
        meta["extrapolated_from"] = str(int(np.argmax(extrapolated)))
    layout = CompartmentLayout(tuple(names), first.layout.node_count)
    out = SnapshotMatrix(data, args.t_step, layout, first.cell_weight)
    write_snapshots(args.out, out, meta)
    print(f"columns={times.size} extrapolated={int(extrapolated.sum())}")
    return EXIT_OK


def cmd_diagnose(args) -> int:
    ref, _ = read_snapshots(args.ref)
    rec, _ = read_snapshots(args.rec)
    subset = args.subset.split(",") if args.subset else None
    report = diagnose(
        ref,
        rec,
        subset=subset,
        conservation_tol=args.conservation_tol,
        l2_tol=args.l2_tol,
        l2_columns=args.l2_columns,
    )
    report.write(args.report)
    for name, verdict in report.verdicts.items():
        print(f"{name}={verdict}")
    if report.failures:
        print("failed: " + ",".join(report.failures), file=sys.stderr)
        return EXIT_VERDICT
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compdmd", description=__doc__.strip().splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a simulator from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="overrides the config seed")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("fit", help="fit DMD models to a snapshot file")
    p.add_argument("--snapshots", required=True)
    p.add_argument("--rank", required=True, help="integer or 'full'")
    p.add_argument("--mode", choices=("coupled", "uncoupled"), default="coupled")
    p.add_argument("--train-fraction", type=float, default=1.0)
    p.add_argument("--randomized", action="store_true", help="use the randomized SVD")
    p.add_argument("--oversample", type=int, default=10)
    p.add_argument("--power-iters", type=int, default=2)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True, help="model path; uncoupled mode inserts the compartment name")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("reconstruct", help="evaluate models on a time grid")
    p.add_argument("--model", nargs="+", required=True)
    p.add_argument("--t-start", type=float, default=0.0)
    p.add_argument("--t-end", type=float, required=True)
    p.add_argument("--t-step", type=float, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, help="accepted for uniformity; reconstruction is deterministic")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("diagnose", help="compare a reconstruction with its reference")
    p.add_argument("--ref", required=True)
    p.add_argument("--rec", required=True)
    p.add_argument("--subset", help="comma-separated compartment names")
    p.add_argument("--conservation-tol", type=float, default=1e-8)
    p.add_argument("--l2-tol", type=float, help="also assert the relative L2 error")
    p.add_argument("--l2-columns", type=int, help="columns covered by --l2-tol (default all)")
    p.add_argument("--report", required=True)
    p.add_argument("--seed", type=int, help="accepted for uniformity; diagnostics are deterministic")
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
