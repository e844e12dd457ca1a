"""Command-line entry point: ``risradar <subcommand> [options]``.

Subcommands
-----------
simulate   detection / mis-detection probability per cycle for every scheme
sweep      the same along one configuration axis
optimize   one WPSO run, dumping its objective trace
analyze    maximum power gain and antenna-placement profiles
verify     quick oracle suite
"""

from __future__ import annotations

import argparse
import ast
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .errors import RisRadarError
from .harness import PROFILES, SWEEP_AXES, load_config, make_config, optimize_once, run_sweep, simulate


def _parse_value(text: str):
    try:
        return ast.literal_eval(text)
    except (ValueError, SyntaxError):
        return text


def _resolve(args):
    overrides = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    for item in args.set or []:
        key, _, raw = item.partition("=")
        overrides[key.strip()] = _parse_value(raw.strip())
    if getattr(args, "axis", None):
        overrides["sweep_axis"] = args.axis
    if getattr(args, "values", None):
        overrides["sweep_values"] = tuple(_parse_value(v) for v in args.values.split(","))
    if args.config:
        return load_config(args.config, args.profile, **overrides)
    return make_config(args.profile or "desk", **overrides)


def _progress(verbose):
    if not verbose:
        return None

    def report(scheme, phase, k):
        print(f"  {scheme:9s} {phase:9s} {k}", file=sys.stderr, flush=True)
    return report


def _print_table(path: Path):
    print(path.read_text(encoding="utf-8"), end="")


def cmd_simulate(args):
    cfg = _resolve(args)
    simulate(cfg, args.out, _progress(args.verbose))
    _print_table(Path(args.out) / "results.csv")
    return 0


def cmd_sweep(args):
    cfg = _resolve(args)
    run_sweep(cfg, args.out, _progress(args.verbose))
    _print_table(Path(args.out) / "results.csv")
    return 0


def cmd_optimize(args):
    cfg = _resolve(args)
    problem, design, trace = optimize_once(cfg, cfg.seed, args.out)
    for row in trace.rows():
        print(f"iter {row[0]:3d}  objective {row[1]:.10g}")
    print(f"{trace.reason} after {trace.iterations} iterations (epsilon {trace.epsilon:.3g})")
    return 0


def cmd_analyze(args):
    from .analysis import (composite_amplitude, optimal_lateral_offset,
                           optimal_phases_and_max_gain, placement_sweep)
    from .geometry import Direction, make_geometry
    from .harness import write_csv

    cfg = _resolve(args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    direction = Direction(cfg.elevation, math.pi / 4)

    rows = []
    for M in range(0, cfg.n_elements + 1):
        geom = make_geometry(M, 1, wavelength=cfg.wavelength, array_offset=cfg.array_offset,
                             eta=cfg.eta)
        rows.append((M, optimal_phases_and_max_gain(geom, direction).gain))
    write_csv(out / "max_gain.csv", ("n_elements", "max_power_gain"), rows)

    geom = make_geometry(max(cfg.n_elements, 1), 1, wavelength=cfg.wavelength, eta=cfg.eta)
    rho = composite_amplitude(geom, direction)
    spacing = cfg.wavelength / 2
    side = int(round(math.sqrt(cfg.n_elements))) or 1
    lx = np.linspace(-3 * spacing, 3 * spacing, 61)
    lz = np.linspace(0.25, 6.0, 47) * cfg.wavelength
    write_csv(out / "placement_lx.csv", ("l_x", "power_gain"),
              placement_sweep(lx, "l_x", side, spacing, rho, cfg.array_offset[2]))
    write_csv(out / "placement_lz.csv", ("l_z", "power_gain"),
              placement_sweep(lz, "l_z", side, spacing, rho, 0.0))
    best = [(z, *optimal_lateral_offset(z, side, spacing, rho)) for z in lz]
    write_csv(out / "placement_best_lx.csv", ("l_z", "best_l_x", "power_gain"), best)
    (out / "manifest.txt").write_text("# analyze\n" + cfg.to_text(), encoding="utf-8")
    for M, g in rows:
        print(f"M={M:3d}  max power gain {g:.6g}")
    return 0


def cmd_verify(args):
    from .verify import run_all

    results = run_all(args.seed or 0)
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return 0 if all(ok for _, ok, _ in results) else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="risradar", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out_default):
        p.add_argument("--config", help="INI file with an [experiment] section")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--out", default=out_default, help="output directory")
        p.add_argument("--profile", choices=sorted(PROFILES), default=None,
                       help="parameter preset (default: desk)")
        p.add_argument("--set", action="append", metavar="KEY=VALUE",
                       help="override one config field; repeatable")
        p.add_argument("-v", "--verbose", action="store_true")
        return p

    common(sub.add_parser("simulate", help=cmd_simulate.__doc__ or "run all schemes"),
           "out/simulate").set_defaults(func=cmd_simulate)
    p = common(sub.add_parser("sweep", help="run all schemes along one axis"), "out/sweep")
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--values", help="comma-separated axis values")
    p.set_defaults(func=cmd_sweep)
    common(sub.add_parser("optimize", help="one WPSO trace"), "out/optimize").set_defaults(
        func=cmd_optimize)
    common(sub.add_parser("analyze", help="gain and placement profiles"), "out/analyze").set_defaults(
        func=cmd_analyze)
    common(sub.add_parser("verify", help="quick oracle checks"), "out/verify").set_defaults(
        func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        return args.func(args)
    except RisRadarError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
