"""Command-line driver: run experiment configs, fit growth exponents from the
resulting CSVs, or validate a config without running it."""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .experiments import ConfigError, fit_exponent, load_config, run_experiment

ENV_OUTPUT_DIR = "LMGSIM_OUTPUT_DIR"


def _resolve_outdir(args, cfg: dict) -> Path:
    if args.out is not None:
        return Path(args.out)
    base = cfg.get("outdir") or os.environ.get(ENV_OUTPUT_DIR) or "runs"
    label = cfg["experiment"] if cfg["experiment"] != "custom" else f"custom-{cfg['task']}"
    return Path(base) / label


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    result = run_experiment(cfg, _resolve_outdir(args, cfg), workers=args.workers)
    for path in result.paths:
        print(path)
    print(f"manifest_sha256={result.manifest['manifest_sha256']}")
    return 0


def _read_csv_columns(path: str) -> tuple[list[str], list[list[float]]]:
    lines = [l for l in Path(path).read_text().splitlines() if l.strip() and not l.startswith("#")]
    if len(lines) < 2:
        raise ConfigError(f"{path} has no data rows")
    header = lines[0].split(",")
    cols = [[] for _ in header]
    for line in lines[1:]:
        parts = line.split(",")
        if len(parts) != len(header):
            raise ConfigError(f"{path}: row width {len(parts)} does not match header width {len(header)}")
        for c, v in zip(cols, parts):
            c.append(float(v))
    return header, cols


def _cmd_fit(args) -> int:
    lo_hi = args.window.split(",")
    if len(lo_hi) != 2:
        raise ConfigError(f"--window expects 'a,b', got {args.window!r}")
    try:
        window = (float(lo_hi[0]), float(lo_hi[1]))
    except ValueError as exc:
        raise ConfigError(f"--window expects numbers, got {args.window!r}") from exc
    header, cols = _read_csv_columns(args.csv)
    t_name = args.time_column or header[0]
    y_name = args.column or header[1]
    for name in (t_name, y_name):
        if name not in header:
            raise ConfigError(f"column {name!r} not in {header}")
    fit = fit_exponent(cols[header.index(t_name)], cols[header.index(y_name)], window)
    print(json.dumps({
        "column": y_name,
        "window": list(window),
        "lambda": fit.lyapunov,
        "stderr": fit.stderr,
        "n_points": fit.n_points,
    }, sort_keys=True))
    return 0


def _cmd_validate(args) -> int:
    cfg = load_config(args.config)
    print(json.dumps(cfg, sort_keys=True, indent=2))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lmgsim",
        description="Collective-spin scrambling and time-reversal metrology datasets.",
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    p_run = sub.add_parser("run", help="run an experiment config and write its datasets")
    p_run.add_argument("config", help="path to a JSON config")
    p_run.add_argument("--out", default=None, help=f"output directory (default: config outdir, ${ENV_OUTPUT_DIR}, or ./runs)")
    p_run.add_argument("--workers", type=int, default=1, help="thread pool size for grid points")
    p_run.set_defaults(func=_cmd_run)

    p_fit = sub.add_parser("fit", help="fit y ~ e^{2 lambda t} on a CSV column")
    p_fit.add_argument("csv", help="CSV produced by run (t in the first column by default)")
    p_fit.add_argument("--window", required=True, help="fit window 'a,b' in the time column's units")
    p_fit.add_argument("--column", default=None, help="y column name (default: second column)")
    p_fit.add_argument("--time-column", default=None, help="time column name (default: first column)")
    p_fit.set_defaults(func=_cmd_fit)

    p_val = sub.add_parser("validate", help="expand and validate a config, print the result")
    p_val.add_argument("config", help="path to a JSON config")
    p_val.set_defaults(func=_cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ValueError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # unwritable paths, integrator failures, ...
        print(f"runtime error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
