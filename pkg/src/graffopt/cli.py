"""Command line entry point: ``graffopt run | table | check``."""
import argparse
import json
import sys
from dataclasses import fields, replace
from pathlib import Path

from . import __version__
from .checks import SELECTORS, SUITES, run_checks
from .experiments import ALGORITHMS, PROBLEMS, ExperimentConfig, UsageError, run_single, run_table

CONFIG_HELP = """\
Configuration file format: one ``key = value`` per line, ``#`` starts a
comment. Keys are the long option names without dashes (``grad-tol`` or
``grad_tol``). Precedence: command-line flags, then the config file, then
built-in defaults. Set GRAFFOPT_THREADS to run trials in parallel.
"""

_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}
_CASTS = {"n": int, "k": int, "m": int, "trials": int, "seed": int, "max_iter": int,
          "grad_tol": float, "step_tol": float, "problem": str, "algorithm": str,
          "algo": str, "out": str, "axis": str, "values": str, "timing": str}


def read_config(path):
    """Parse a ``key = value`` file into a dict with normalized keys."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text().splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, value = (part.strip() for part in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in _CASTS:
            raise UsageError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _CASTS[key](value)
        except ValueError:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {value!r}") from None
    if "algo" in out:
        out["algorithm"] = out.pop("algo")
    return out


def _parse_values(text):
    if isinstance(text, (list, tuple)):
        return tuple(int(v) for v in text)
    items = [v for v in str(text).replace(",", " ").split() if v]
    try:
        return tuple(int(v) for v in items)
    except ValueError:
        raise UsageError(f"sweep values must be integers: {text!r}") from None


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    v = str(value).strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {value!r}")


def _add_common(p):
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--problem", choices=PROBLEMS)
    p.add_argument("--algo", dest="algorithm", choices=ALGORITHMS)
    p.add_argument("--n", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--m", type=int, help="number of points (mean problem)")
    p.add_argument("--trials", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--grad-tol", dest="grad_tol", type=float)
    p.add_argument("--step-tol", dest="step_tol", type=float)
    p.add_argument("--max-iter", dest="max_iter", type=int)
    p.add_argument("--out", help="output directory")
    p.add_argument("--no-timing", dest="timing", action="store_const", const=False,
                   help="write 0 for wall-clock columns (byte-reproducible output)")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="graffopt", description="Optimization on the affine Grassmannian.",
        epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--version", action="version", version=f"graffopt {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run seeded trials and write convergence traces",
                         epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(run)
    table = sub.add_parser("table", help="sweep k or n and tabulate accuracy and time",
                           epilog=CONFIG_HELP, formatter_class=argparse.RawDescriptionHelpFormatter)
    _add_common(table)
    table.add_argument("--axis", choices=("k", "n"))
    table.add_argument("--values", help="comma-separated sweep values, e.g. 1,2,3")
    check = sub.add_parser("check", help="run the property suites")
    check.add_argument("suite", nargs="?", default="all",
                       help=f"one of {', '.join((*SELECTORS, *SUITES))}")
    check.add_argument("--seed", type=int, default=0)
    check.add_argument("--cases", type=int, help="random cases per suite")
    check.add_argument("--perturb", type=float, default=0.0,
                       help="inject an orthonormality perturbation of this size")
    check.add_argument("--out", help="write the JSON report here instead of stdout")
    return parser


def config_from_args(args):
    """Merge defaults, config file and flags (flags win)."""
    merged = {}
    if getattr(args, "config", None):
        merged.update(read_config(args.config))
    for key in _TYPES:
        value = getattr(args, key, None)
        if value is not None:
            merged[key] = value
    if "values" in merged:
        merged["values"] = _parse_values(merged["values"])
    if "timing" in merged:
        merged["timing"] = _parse_bool(merged["timing"])
    return replace(ExperimentConfig(), **merged)


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "check":
            valid = (*SELECTORS, *SUITES)
            if args.suite not in valid:
                raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(valid)}")
            report = run_checks(args.suite, seed=args.seed, cases=args.cases, perturb=args.perturb)
            text = json.dumps(report, indent=2, sort_keys=True) + "\n"
            if args.out:
                Path(args.out).write_text(text)
            else:
                sys.stdout.write(text)
            return 0 if report["passed"] else 1
        cfg = config_from_args(args)
        if args.command == "run":
            summary, code = run_single(cfg)
        else:
            summary, code = run_table(cfg)
        print(f"{args.command}: {summary['status']} -> {cfg.out}")
        return code
    except UsageError as exc:
        print(f"graffopt: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
