"""Command line interface: ``bdl <subcommand> [flags]``."""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Sequence

from ..errors import BetaDelaunayError, ConfigurationError, DomainError
from ..model import ModelParams, cumulant, log_volume_moment
from ..sampler import RngStream, sample_cell
from ..tessellation import (Window, build_certified, default_margin, manifest, render_svg,
                            window_for_cells, write_cells_csv)
from .experiments import (ExperimentConfig, run_clt, run_cumulant_sweep, run_kendall, run_ldp,
                          run_lower_tail, run_modphi, run_upper_tail)

EXIT_OK, EXIT_VERDICT, EXIT_CONFIG = 0, 1, 2

EXPERIMENTS = {
    "kendall": run_kendall,
    "tail-upper": run_upper_tail,
    "tail-lower": run_lower_tail,
    "clt": run_clt,
    "modphi": run_modphi,
    "ldp": run_ldp,
    "sweep": run_cumulant_sweep,
}


class _Parser(argparse.ArgumentParser):
    """argparse exits with status 2 on bad usage, which matches the configuration-error code."""


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _global_flags() -> argparse.ArgumentParser:
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--d", type=float, default=3, help="space-time dimension (tessellation lives in R^(d-1))")
    g.add_argument("--beta", type=float, default=0.0)
    g.add_argument("--nu", type=float, default=0.0)
    g.add_argument("--gamma", type=float, default=1.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--budget", type=int, default=None, help="Monte Carlo sample budget")
    g.add_argument("--out", type=Path, default=None, help="directory for reports")
    g.add_argument("--format", choices=("csv", "json"), default="json")
    return g


def build_parser() -> argparse.ArgumentParser:
    common = _global_flags()
    parser = _Parser(prog="bdl", description="beta-Delaunay typical-cell toolkit", parents=[common])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    m = sub.add_parser("moments", parents=[common], help="closed-form E Vol^s")
    m.add_argument("--s", type=float, default=1.0)
    c = sub.add_parser("cumulants", parents=[common], help="exact cumulants with bounds")
    c.add_argument("--orders", type=int, nargs="+", default=[1, 2, 3, 4])
    s = sub.add_parser("sample", parents=[common], help="dump sampled cells as CSV")
    s.add_argument("--method", choices=("plain", "volume", "mixture", "auto"), default="plain")
    t = sub.add_parser("tessellate", parents=[common], help="certified planar tessellation")
    t.add_argument("--window", type=float, default=None, help="side length of the square window")
    t.add_argument("--hmax", type=float, default=None)
    t.add_argument("--svg", type=Path, default=None)
    for name in EXPERIMENTS:
        e = sub.add_parser(name, parents=[common], help=f"{name} experiment")
        e.add_argument("--a-grid", type=_float_list, default=None)
        e.add_argument("--eps-grid", type=_float_list, default=None)
        e.add_argument("--t-grid", type=_float_list, default=None)
        e.add_argument("--d-grid", type=_float_list, default=None)
    return parser


def _params(args) -> ModelParams:
    d = int(args.d) if float(args.d).is_integer() else args.d
    return ModelParams(d, args.beta, args.nu, args.gamma)


def _emit(text: str, args, name: str) -> None:
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / f"{name}.{args.format}").write_text(text)
    sys.stdout.write(text)


def _cmd_moments(args) -> int:
    params = _params(args)
    log_m = log_volume_moment(params, args.s)
    rec = {"d": params.d, "beta": params.beta, "nu": params.nu, "gamma": params.gamma, "s": args.s,
           "moment": math.exp(log_m), "log_moment": log_m}
    if args.format == "json":
        _emit(json.dumps(rec, indent=2) + "\n", args, "moments")
    else:
        _emit(",".join(rec) + "\n" + ",".join(repr(v) for v in rec.values()) + "\n", args, "moments")
    return EXIT_OK


def _cmd_cumulants(args) -> int:
    params = _params(args)
    recs = []
    for m in args.orders:
        r = cumulant(params, m)
        recs.append({"order": r.order, "value": r.value, "bound": r.bound})
    if args.format == "json":
        _emit(json.dumps(recs, indent=2) + "\n", args, "cumulants")
    else:
        lines = ["order,value,bound"] + [f"{r['order']},{r['value']!r},{'' if r['bound'] is None else repr(r['bound'])}"
                                         for r in recs]
        _emit("\n".join(lines) + "\n", args, "cumulants")
    return EXIT_OK


def _cmd_sample(args) -> int:
    params = _params(args)
    n = args.budget if args.budget is not None else 1000
    if n < 1:
        raise ConfigurationError("budget must be at least 1")
    rng = RngStream(args.seed, 0).generator()
    lines = ["stream,index,radius,log_volume,attempts"]
    for i in range(n):
        cell = sample_cell(params, rng, method=args.method)
        lines.append(f"0,{i},{cell.radius!r},{cell.log_volume!r},{cell.attempts}")
    text = "\n".join(lines) + "\n"
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        (args.out / "sample.csv").write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def _cmd_tessellate(args) -> int:
    params = _params(args)
    if params.d != 2 and params.d != 3:
        raise ConfigurationError("tessellate supports d in {2, 3}")
    if args.window is not None:
        if args.window <= 0:
            raise ConfigurationError("window side must be positive")
        window = Window.square(args.window, dim=params.dim)
    else:
        window = window_for_cells(params, 500)
    tri = build_certified(params, window, RngStream(args.seed, 0), h_max=args.hmax)
    info = manifest(tri, seed=args.seed)
    if args.out is not None:
        args.out.mkdir(parents=True, exist_ok=True)
        write_cells_csv(tri, args.out / "cells.csv")
        (args.out / "manifest.json").write_text(json.dumps(info, indent=2, sort_keys=True) + "\n")
    if args.svg is not None:
        if params.dim != 2:
            raise ConfigurationError("SVG output needs a planar tessellation (d = 3)")
        render_svg(tri, window, args.svg)
    sys.stdout.write(json.dumps(info, indent=2, sort_keys=True) + "\n")
    return EXIT_OK if info["certified"] else EXIT_VERDICT


def _cmd_experiment(args) -> int:
    params = _params(args)
    config = ExperimentConfig(params=params, seed=args.seed, budget=args.budget,
                              a_grid=args.a_grid, eps_grid=args.eps_grid, t_grid=args.t_grid,
                              d_grid=args.d_grid, out_dir=args.out)
    report = EXPERIMENTS[args.command](config)
    text = report.to_json() if args.format == "json" else report.to_csv()
    if args.out is not None:
        report.write(args.out, args.format)
    sys.stdout.write(text)
    sys.stderr.write(report.summary() + "\n")
    return report.exit_code()


HANDLERS = {"moments": _cmd_moments, "cumulants": _cmd_cumulants, "sample": _cmd_sample,
            "tessellate": _cmd_tessellate}


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    handler = HANDLERS.get(args.command, _cmd_experiment)
    try:
        return handler(args)
    except (ConfigurationError, DomainError) as exc:
        sys.stderr.write(f"configuration error: {exc}\n")
        return EXIT_CONFIG
    except BetaDelaunayError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
