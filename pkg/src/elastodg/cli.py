"""Command-line front end: ``elastodg {run,rates,compare-tv,gd-study}``.

Exit status: 0 on success, 2 on usage or configuration errors, 1 on
numerical failure or I/O errors.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from elastodg.errors import (
    ConstitutiveViolation,
    InvalidArgument,
    NumericalError,
    UnsupportedConfiguration,
)
from elastodg.experiments import (
    KINDS,
    PROBLEM_NAMES,
    RULES,
    SOLVERS,
    format_table,
    load_config,
    study_compare_tv,
    study_gd,
    study_rates,
    study_run,
    write_table,
)

# flag dest -> config key
_FLAG_KEYS = {
    "problem": "problem",
    "solver": "solver",
    "N": "N",
    "K": "K",
    "T": "T",
    "rule": "rule",
    "ratio": "ratio",
    "lam": "lambda_init",
    "adaptive": "adaptive",
    "limiter": "limiter",
    "tol_I": "tol_I",
    "tol_u": "tol_u",
    "max_iter": "max_iter",
    "penalty": "mu",
    "tolerances": "tolerances",
    "capped_N": "capped_N",
    "out": "out",
}


def _ratio(text):
    if "/" in text:
        a, b = text.split("/", 1)
        return float(a) / float(b)
    return float(text)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="INI-style experiment config")
    common.add_argument("--out", metavar="DIR", help="output directory")
    common.add_argument("--problem", choices=PROBLEM_NAMES)
    common.add_argument("--solver", choices=SOLVERS)
    common.add_argument("--N", type=int, nargs="+", metavar="N", help="cell count(s)")
    common.add_argument("--K", type=int, help="polynomial degree")
    common.add_argument("--T", type=float, help="final time")
    common.add_argument("--rule", choices=RULES, help="time-step rule")
    common.add_argument("--ratio", type=_ratio, help="Courant ratio k/h, e.g. 1/12")
    common.add_argument("--lambda", dest="lam", type=float, help="GD step")
    common.add_argument("--adaptive", action=argparse.BooleanOptionalAction, default=None)
    common.add_argument("--limiter", choices=KINDS)
    common.add_argument("--tol-I", dest="tol_I", type=float)
    common.add_argument("--tol-u", dest="tol_u", type=float)
    common.add_argument("--max-iter", dest="max_iter", type=int)
    common.add_argument("--penalty", type=float, help="interior penalty constant mu")

    parser = argparse.ArgumentParser(prog="elastodg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("run", parents=[common], help="single simulation, solution files")
    sub.add_parser("rates", parents=[common], help="error / convergence-rate table")
    sub.add_parser("compare-tv", parents=[common], help="total-variation comparison")
    gd = sub.add_parser("gd-study", parents=[common], help="GD stopping-tolerance sweep")
    gd.add_argument("--tolerances", type=float, nargs="+", metavar="TOL")
    gd.add_argument("--capped-N", dest="capped_N", type=int, nargs="+", metavar="N")
    return parser


def _overrides(args) -> dict:
    return {key: getattr(args, dest, None) for dest, key in _FLAG_KEYS.items()}


def _emit(tables, config, out_dir):
    for t in tables:
        path = write_table(t, out_dir, config)
        if t.name not in ("initial", "final"):
            sys.stdout.write(format_table(t))
        print(f"wrote {path}")


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        config = load_config(args.config, _overrides(args))
        out_dir = Path(config.out)
        if args.command == "run":
            tables, summary = study_run(config)
            _emit(tables, config, out_dir)
            lines = ["# " + h for h in config.header_lines()]
            lines += [f"{k} = {v!r}" for k, v in summary.items()]
            path = out_dir / "run_report.txt"
            path.write_text("\n".join(lines) + "\n", encoding="utf-8")
            print(f"wrote {path}")
        elif args.command == "rates":
            _emit([study_rates(config)], config, out_dir)
        elif args.command == "compare-tv":
            _emit(list(study_compare_tv(config)), config, out_dir)
        else:
            _emit(study_gd(config), config, out_dir)
    except (NumericalError, ConstitutiveViolation) as exc:
        print(f"error: numerical failure: {exc}", file=sys.stderr)
        return 1
    except (InvalidArgument, UnsupportedConfiguration) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
