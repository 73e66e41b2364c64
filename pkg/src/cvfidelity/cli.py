"""Command-line entry point: ``cvfidelity {point,sweep,baseline,mc-check}``."""

from __future__ import annotations

import argparse
import sys
import warnings

from . import __version__
from .sweep import (
    ConfigError,
    baseline_rows,
    columns,
    default_workers,
    load_config,
    mc_check_rows,
    render,
    run_point,
    run_sweep,
)

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_CONFIG = 2

BASELINE_COLUMNS = ["name", "value", "provenance"]
MC_COLUMNS = ["family", "g", "F_quad", "dF_quad", "F_mc", "dF_mc", "stderr_F", "stderr_dF",
              "z_F", "z_dF", "pass", "n_samples", "seed"]


def build_parser():
    parser = argparse.ArgumentParser(
        prog="cvfidelity",
        description="Average fidelity and fidelity deviation of CV teleportation.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                        help="override a config entry, e.g. ensemble.sigma_c=5 (repeatable)")
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--workers", type=int, default=None,
                        help="worker processes (default: available CPUs)")
    common.add_argument("--seed", type=int, default=None, help="Monte Carlo seed override")
    common.add_argument("--no-timestamp", action="store_true",
                        help="omit the generation time so output is byte-reproducible")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("point", parents=[common], help="evaluate every family at one parameter point")
    sub.add_parser("sweep", parents=[common], help="sweep one parameter along the configured axis")
    sub.add_parser("baseline", parents=[common], help="reference values for the ensemble")
    mc = sub.add_parser("mc-check", parents=[common], help="compare quadrature with Monte Carlo")
    mc.add_argument("--n-samples", type=int, default=None)
    return parser


def _emit(text, out):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    assignments = list(args.set)
    try:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            config = load_config(args.config, assignments)
            if args.seed is not None and config.tree["mc_check"] is not None:
                assignments.append(f"mc_check.seed={args.seed}")
                config = load_config(args.config, assignments)
    except (ConfigError, OSError) as exc:
        print(f"cvfidelity: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for w in caught:
        print(f"cvfidelity: warning: {w.message}", file=sys.stderr)
    workers = args.workers if args.workers is not None else default_workers()
    timestamp = not args.no_timestamp
    status = EXIT_OK
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        if args.command == "sweep":
            if config.axis_name is None:
                print("cvfidelity: error: config key 'axis' is required for sweep", file=sys.stderr)
                return EXIT_CONFIG
            rows, cols = run_sweep(config, workers), columns(config)
        elif args.command == "point":
            if config.axis_name is not None:
                config = load_config(args.config, assignments + ["axis=null"])
            rows, cols = [run_point(config)], columns(config)
        elif args.command == "baseline":
            rows, cols = baseline_rows(config), BASELINE_COLUMNS
        else:
            rows = mc_check_rows(config, n_samples=args.n_samples, seed=args.seed, workers=workers)
            cols = MC_COLUMNS
            status = EXIT_OK if all(r["pass"] for r in rows) else EXIT_FAIL
    _emit(render(rows, cols, config, args.command, args.format, timestamp), args.out)
    return status


if __name__ == "__main__":
    sys.exit(main())
