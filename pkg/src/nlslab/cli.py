"""Command-line front end.

Subcommands: solve, localize, evolve, sweep, emit-plots, validate-config.
Exit codes: 0 success, 1 configuration error, 2 non-convergence (reports
are still written). The env var NLSLAB_OUT overrides the default output
root when --out is not given.
"""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, MissingArtifacts, NlsLabError
from .scenario import emit_plots, load_scenario, run_scenario, sweep


def _add_common(p, jobs=False):
    p.add_argument("--config", required=True, help="scenario YAML file")
    p.add_argument("--out", default=None, help="output root directory")
    p.add_argument("--seed", type=int, default=None, help="override scenario seed")
    if jobs:
        p.add_argument("--jobs", type=int, default=1, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nlslab",
        description="Numerical laboratory for compactly supported "
                    "self-similar Schrodinger solutions",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for stage, doc in (("solve", "solve the stationary profile only"),
                       ("localize", "solve and run the localization analysis"),
                       ("evolve", "full pipeline including time evolution")):
        p = sub.add_parser(stage, help=doc)
        _add_common(p)
    p = sub.add_parser("sweep", help="run the scenario across its amplitude list")
    _add_common(p, jobs=True)
    p = sub.add_parser("emit-plots", help="write gnuplot data files for a run")
    p.add_argument("--out", required=True, help="run directory to process")
    p = sub.add_parser("validate-config", help="parse and validate a scenario")
    p.add_argument("--config", required=True)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command in ("solve", "localize", "evolve"):
            report, run_dir, code = run_scenario(
                args.config, out=args.out, seed=args.seed, stage=args.command)
            print(f"report written to {run_dir}")
            if code != 0:
                print("profile solve did not converge", file=sys.stderr)
            return code
        if args.command == "sweep":
            rows, run_dir, code = sweep(args.config, out=args.out,
                                        jobs=args.jobs, seed=args.seed)
            print(f"sweep of {len(rows)} amplitudes written to {run_dir}")
            return code
        if args.command == "emit-plots":
            written = emit_plots(args.out)
            for path in written:
                print(path)
            return 0
        if args.command == "validate-config":
            cfg = load_scenario(args.config)
            print(json.dumps(cfg, sort_keys=True, indent=1))
            return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        if exc.keys:
            print(f"offending keys: {exc.keys}", file=sys.stderr)
        return 1
    except MissingArtifacts as exc:
        print(f"missing artifacts: {exc}", file=sys.stderr)
        return 1
    except NlsLabError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
