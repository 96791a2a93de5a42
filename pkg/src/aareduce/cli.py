"""Command-line front end.

::

    aareduce check SCENARIO...      run every declared analysis and assertion
    aareduce solve SCENARIO...      solve only, writing <name>.traj.csv
    aareduce analyze SIGNAL.csv     automorphy diagnostics of a sampled signal
    aareduce demo list
    aareduce demo emit NAME... | --all

Global options (accepted before or after the command): ``--out DIR``
(default ``$AAREDUCE_OUT`` or ``./aareduce_out``), ``--tol-algebra X``,
``--tol-ode X``, ``--jobs N``. Each scenario writes into ``DIR/<name>/``.

Exit codes: 0 pass, 2 input error, 3 numerical or assertion failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import demos
from .automorphy import Verdict, classify, integral_aa_check, read_signal_csv
from .errors import AAReduceError, AccuracyError, ConvergenceError
from .linalg import DEFAULT_TOL, ToleranceConfig
from .scenario import EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK, ScenarioError, dump_report, load_scenario, run_scenario

DEFAULT_OUT = "aareduce_out"


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors already; keep the message terse.
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def _positive(kind):
    def convert(text):
        try:
            value = kind(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid {kind.__name__} value: {text!r}") from None
        if not (value > 0 and math.isfinite(value)):
            raise argparse.ArgumentTypeError(f"must be positive, got {text}")
        return value

    return convert


def _global_options(parser, default):
    parser.add_argument("--out", metavar="DIR", default=default, help="output directory")
    parser.add_argument("--tol-algebra", type=_positive(float), metavar="X", default=default,
                        help="relative tolerance for algebraic identities")
    parser.add_argument("--tol-ode", type=_positive(float), metavar="X", default=default,
                        help="tolerance for trajectory comparisons")
    parser.add_argument("--jobs", type=_positive(int), metavar="N", default=default,
                        help="run independent scenarios in N processes")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="aareduce", description="Invariant-subspace diagnostics for u'' + 2Bu' + Au = f.")
    _global_options(parser, None)
    # The same flags after the command; SUPPRESS keeps them from clobbering
    # values given before it.
    common = argparse.ArgumentParser(add_help=False)
    _global_options(common, argparse.SUPPRESS)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("check", parents=[common], help="run declared analyses and assertions")
    p.add_argument("scenarios", nargs="+", metavar="SCENARIO")
    p = sub.add_parser("solve", parents=[common], help="solve only and write the trajectory CSV")
    p.add_argument("scenarios", nargs="+", metavar="SCENARIO")

    p = sub.add_parser("analyze", parents=[common], help="classify a sampled signal CSV")
    p.add_argument("csv")
    p.add_argument("--eps", type=_positive(float), default=0.1)
    p.add_argument("--bound-cap", type=_positive(float), default=math.inf)
    p.add_argument("--expect", choices=[v.value for v in Verdict], help="exit 3 unless the verdict matches")

    p = sub.add_parser("demo", parents=[common], help="shipped scenario catalog")
    demo_sub = p.add_subparsers(dest="demo_command", required=True, parser_class=_Parser)
    demo_sub.add_parser("list", parents=[common])
    e = demo_sub.add_parser("emit", parents=[common])
    e.add_argument("names", nargs="*", metavar="NAME")
    e.add_argument("--all", action="store_true", help="emit the whole catalog")
    return parser


def _tolerances(args) -> ToleranceConfig:
    return ToleranceConfig(
        algebra_tol=args.tol_algebra or DEFAULT_TOL.algebra_tol,
        rank_tol=DEFAULT_TOL.rank_tol,
        ode_tol=args.tol_ode or DEFAULT_TOL.ode_tol,
    )


def _out_root(args) -> Path:
    return Path(args.out or os.environ.get("AAREDUCE_OUT") or DEFAULT_OUT)


def _run_one(path, out_root, tol, only):
    """Worker: returns (label, exit code, message)."""
    try:
        scn = load_scenario(path, tol)
    except ScenarioError as exc:
        return str(path), EXIT_INPUT, f"input error: {exc}"
    try:
        result = run_scenario(scn, Path(out_root) / scn.name, tol, only)
    except (AccuracyError, ConvergenceError) as exc:
        return scn.name, EXIT_NUMERICAL, f"numerical failure: {exc}"
    except AAReduceError as exc:
        return scn.name, EXIT_INPUT, f"input error: {exc}"
    return scn.name, result.exit_code, result.message


def _run_scenarios(args, only):
    tol = _tolerances(args)
    out_root = _out_root(args)
    paths = list(args.scenarios)
    jobs = min(args.jobs or 1, len(paths))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_one, paths, [out_root] * len(paths), [tol] * len(paths),
                                    [only] * len(paths)))
    else:
        results = [_run_one(p, out_root, tol, only) for p in paths]
    worst = EXIT_OK
    for label, code, message in results:
        status = "ok" if code == EXIT_OK else "FAILED"
        print(f"{label}: {status}" + (f" ({message})" if message else ""), file=sys.stderr if code else sys.stdout)
        worst = max(worst, code)
    return worst


def _analyze(args):
    try:
        sig = read_signal_csv(args.csv)
    except (AAReduceError, OSError, ValueError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    verdict = classify(sig, eps=args.eps, bound_cap=args.bound_cap)
    integral = integral_aa_check(sig, args.bound_cap)
    stem = Path(args.csv).stem
    if stem.endswith(".signal"):
        stem = stem[: -len(".signal")]
    report = {
        "signal": stem,
        "samples": sig.count,
        "dt": sig.dt,
        "eps": args.eps,
        "bound_cap": args.bound_cap,
        "automorphy": verdict.to_json(),
        "integral": {
            "range_bounded": integral.range_bounded,
            "sup_estimate": integral.sup_estimate,
            "growth_ratio": integral.growth_ratio,
            "note": integral.note,
        },
    }
    outdir = _out_root(args) / stem
    outdir.mkdir(parents=True, exist_ok=True)
    dump_report(report, outdir / f"{stem}.analysis.json")
    print(f"{stem}: {verdict.verdict.value}")
    if args.expect and verdict.verdict.value != args.expect:
        print(f"expected {args.expect}, got {verdict.verdict.value}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


def _demo(args):
    if args.demo_command == "list":
        for name in demos.demo_names():
            print(f"{name}\t{demos.CATALOG[name]['description']}")
        return EXIT_OK
    names = demos.demo_names() if args.all else args.names
    if not names:
        print("demo emit: give at least one NAME or --all", file=sys.stderr)
        return EXIT_INPUT
    unknown = [n for n in names if n not in demos.CATALOG]
    if unknown:
        print(f"unknown demo(s): {', '.join(unknown)}; see 'aareduce demo list'", file=sys.stderr)
        return EXIT_INPUT
    out = _out_root(args)
    for name in names:
        print(demos.emit_demo(name, out))
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "check":
        return _run_scenarios(args, None)
    if args.command == "solve":
        return _run_scenarios(args, ("solve",))
    if args.command == "analyze":
        return _analyze(args)
    return _demo(args)


if __name__ == "__main__":
    sys.exit(main())
