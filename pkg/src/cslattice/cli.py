"""Command-line entry point.

Exit codes: 0 success, 2 configuration or parameter error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import logging
import sys

from . import __version__
from . import runner
from .config import load_config
from .errors import (
    BracketingError,
    ConfigError,
    CutoffError,
    DomainError,
    IntegrationError,
    InvalidParameterError,
    NumericalDegeneracyError,
    ShapeError,
    SiteIndexError,
)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3

CONFIG_ERRORS = (ConfigError, InvalidParameterError, SiteIndexError, ShapeError, DomainError, OSError)
NUMERIC_ERRORS = (IntegrationError, CutoffError, BracketingError, NumericalDegeneracyError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cslattice",
        description="Coherent-state dynamics of quantized nonlinear lattices.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: ./out)")
    common.add_argument("--workers", type=int, default=None,
                        help="parallel processes for independent runs (default: CPU count)")

    with_config = argparse.ArgumentParser(add_help=False, parents=[common])
    with_config.add_argument("config", help="TOML run configuration")
    with_config.add_argument("--rel-tol", type=float, default=None, help="override integrator.rel_tol")
    with_config.add_argument("--abs-tol", type=float, default=None, help="override integrator.abs_tol")
    with_config.add_argument("--ordering", choices=("no", "so", "both"), default=None,
                             help="override the operator ordering")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[with_config],
                   help="integrate the quasiclassical equations and write the trajectory")
    sub.add_parser("qfunc", parents=[with_config],
                   help="simulate and write per-site Q-function grids at observables.at")
    sub.add_parser("poisson", parents=[with_config],
                   help="simulate and write per-site number distributions at observables.at")
    sub.add_parser("sweep-gamma", parents=[with_config],
                   help="bisect the self-trapping threshold for every N in sweep.n_values")
    sub.add_parser("exact-compare", parents=[with_config],
                   help="compare with exact truncated-Fock propagation")
    geo = sub.add_parser("geometry", parents=[common], help="coherent-state geometry checks")
    geo.add_argument("--seed", type=int, default=0, help="seed for the random sample points")
    return parser


def _overrides(args) -> dict:
    return {
        "integrator.rel_tol": args.rel_tol,
        "integrator.abs_tol": args.abs_tol,
        "ordering": args.ordering,
    }


def _dispatch(args) -> int:
    if args.command == "geometry":
        manifest = runner.write_geometry_report(args.out, seed=args.seed)
        for row in manifest["rows"]:
            print(f"{'PASS' if row[-1] else 'FAIL'}  {row[0]:<32} {row[1]:<16} {runner.fmt(row[2])}")
        return EXIT_OK if manifest["status"] == "ok" else EXIT_NUMERIC

    config = load_config(args.config, _overrides(args))
    if args.command == "simulate":
        manifest = runner.run(config, args.out, workers=args.workers)
    elif args.command == "qfunc":
        manifest = runner.run(config, args.out, "qfunc", qfunc=True, poisson=False, workers=args.workers)
    elif args.command == "poisson":
        manifest = runner.run(config, args.out, "poisson", qfunc=False, poisson=True, workers=args.workers)
    elif args.command == "sweep-gamma":
        manifest = runner.sweep_gamma(config, args.out, workers=args.workers)
    else:
        manifest = runner.exact_compare(config, args.out, workers=args.workers)
    print(f"{args.command}: {manifest['status']}, {len(manifest['files'])} file(s) in {args.out}")
    return EXIT_OK if manifest["status"] == "ok" else EXIT_NUMERIC


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NUMERIC_ERRORS as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
