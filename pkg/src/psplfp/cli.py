"""Command-line interface.

Exit codes: 0 consistent (or success), 1 inconsistent, 2 usage, input or
numerical error.  Machine-readable output goes to stdout, a short human
summary to stderr.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bounds import IterationLimitExceeded, exact_string
from .consistency import InvalidPspError, check_consistency
from .core import as_rational
from .floating import PrecisionCapExceeded, PrecisionSchedule
from .models import (
    BracketError,
    KernelError,
    critical_radius,
    bisect_consistency,
    gen_hn,
    gen_neutron,
    gen_toy,
    kernel_from_spec,
)
from .pipeline import run_bounds
from .textformat import PspParseError, format_psp, format_rational, parse_psp

EXIT_OK = 0
EXIT_INCONSISTENT = 1
EXIT_ERROR = 2


class UsageError(Exception):
    pass


def _rational_arg(text: str):
    try:
        return as_rational(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from None


def _read_psp(path: str):
    try:
        text = sys.stdin.read() if path == "-" else Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None
    return parse_psp(text)


def _emit(obj, fmt: str, out):
    if fmt == "json":
        out.write(json.dumps(obj, indent=2, sort_keys=False) + "\n")
    else:
        for key, val in obj.items():
            out.write(f"{key}: {val if not isinstance(val, (dict, list)) else json.dumps(val)}\n")


def cmd_check(args, out, err) -> int:
    psp = _read_psp(args.file)
    result = check_consistency(psp)
    verdict = result.verdict
    obj = {
        "verdict": "consistent" if verdict.consistent else "inconsistent",
        "witness_scc": list(verdict.witness_scc) if verdict.witness_scc else None,
        "removed_zero_vars": list(result.removed_zero_vars),
        "op_count": verdict.op_count,
    }
    _emit(obj, args.format, out)
    summary = obj["verdict"]
    if verdict.witness_scc:
        summary += f" (witness SCC: {', '.join(verdict.witness_scc)})"
    err.write(f"{args.file}: {summary}\n")
    return EXIT_OK if verdict.consistent else EXIT_INCONSISTENT


def _schedule(args) -> PrecisionSchedule:
    env = PrecisionSchedule.from_env()
    start = args.precision_start or env.start
    cap = args.precision_cap or max(env.cap, start)
    try:
        return PrecisionSchedule(start, cap)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def cmd_bounds(args, out, err) -> int:
    if args.epsilon <= 0:
        raise UsageError("--epsilon must be positive")
    if args.digits < 0:
        raise UsageError("--digits must be nonnegative")
    psp = _read_psp(args.file)
    result = run_bounds(psp, args.epsilon, _schedule(args), args.max_iters, args.trace)
    obj = result.to_json(args.digits)
    if args.format == "json":
        _emit(obj, "json", out)
    else:
        for name in result.variables:
            b = obj["bounds"][name]
            out.write(f"{name}: [{b['lb']}, {b['ub']}]\n")
        out.write(f"consistent: {' '.join(obj['consistent_vars'])}\n")
        out.write(f"inconsistent: {' '.join(obj['inconsistent_vars'])}\n")
    err.write(
        f"{args.file}: {obj['iterations']} iterations, max precision {obj['max_precision']} bits, "
        f"{len(obj['inconsistent_vars'])} variables certified below 1\n"
    )
    return EXIT_OK


def cmd_gen(args, out, err) -> int:
    if args.model == "hn":
        if args.n is None:
            raise UsageError("gen hn needs --n")
        try:
            psp = gen_hn(args.n)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        out.write(format_psp(psp))
        return EXIT_OK
    if args.model == "toy":
        if args.D is None:
            raise UsageError("gen toy needs --D")
        try:
            psp = gen_toy(args.D)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        out.write(format_psp(psp))
        return EXIT_OK
    if args.D is None or args.n is None:
        raise UsageError("gen neutron needs --D and --n")
    try:
        model = gen_neutron(args.D, args.n, kernel_from_spec(args.kernel))
    except (KernelError, OSError) as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out.write(f"# neutron model D={format_rational(model.D)} segments={args.n} kernel={args.kernel}\n")
    for j, factor in sorted(model.clamp_factors.items()):
        out.write(f"# row Q{j} clamped by factor {exact_string(factor)}\n")
    out.write(format_psp(model.psp))
    return EXIT_OK


def cmd_critical(args, out, err) -> int:
    if args.tol <= 0:
        raise UsageError("--tol must be positive")
    try:
        if args.model == "toy":
            result = bisect_consistency(gen_toy, args.lo, args.hi, args.tol)
        else:
            kernel = kernel_from_spec(args.kernel)
            result = critical_radius(args.n, kernel, args.lo, args.hi, args.tol)
    except (BracketError, KernelError, OSError) as exc:
        raise UsageError(str(exc)) from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    steps = []
    for s in result.steps:
        step = {"D": exact_string(s.D), "consistent": s.consistent}
        if not args.no_timings:
            step["seconds"] = round(s.seconds, 6)
        steps.append(step)
    obj = {
        "model": args.model,
        "interval": [exact_string(result.lo), exact_string(result.hi)],
        "interval_decimal": [format_rational(result.lo), format_rational(result.hi)],
        "width": exact_string(result.width),
        "steps": steps,
    }
    _emit(obj, args.format, out)
    err.write(f"critical D in [{format_rational(result.lo)}, {format_rational(result.hi)}]\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="psplfp", description="Consistency checks and certified bounds for PSPs.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("check", help="decide whether the least fixed point is the all-ones vector")
    p.add_argument("file", help="PSP file ('-' for stdin)")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("bounds", help="certified lower and upper bounds on the least fixed point")
    p.add_argument("file", help="PSP file ('-' for stdin)")
    p.add_argument("--epsilon", type=_rational_arg, required=True)
    p.add_argument("--precision-start", type=int, default=None)
    p.add_argument("--precision-cap", type=int, default=None)
    p.add_argument("--max-iters", type=int, default=10**6)
    p.add_argument("--trace", action="store_true")
    p.add_argument("--digits", type=int, default=12, help="decimal places of the rounded bounds")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("gen", help="print a generated PSP")
    p.add_argument("model", choices=("hn", "neutron", "toy"))
    p.add_argument("--n", type=int)
    p.add_argument("--D", type=_rational_arg)
    p.add_argument("--kernel", default="builtin", help="builtin, surrogate or file:PATH")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("critical", help="bisect the radius at which consistency is lost")
    p.add_argument("--model", choices=("toy", "neutron"), default="neutron")
    p.add_argument("--n", type=int, default=20, help="number of segments (neutron model)")
    p.add_argument("--kernel", default="builtin")
    p.add_argument("--lo", type=_rational_arg, required=True)
    p.add_argument("--hi", type=_rational_arg, required=True)
    p.add_argument("--tol", type=_rational_arg, default=as_rational("0.01"))
    p.add_argument("--no-timings", action="store_true", help="omit per-step timings for byte-stable output")
    p.add_argument("--format", choices=("json", "text"), default="json")
    p.set_defaults(func=cmd_critical)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args, out, err)
    except PspParseError as exc:
        err.write(f"parse error: {exc}\n")
    except InvalidPspError as exc:
        err.write(f"invalid PSP: {exc}\n")
    except UsageError as exc:
        err.write(f"error: {exc}\n")
    except PrecisionCapExceeded as exc:
        err.write(f"precision cap exceeded: {exc}; raise --precision-cap\n")
    except IterationLimitExceeded as exc:
        err.write(f"iteration limit reached: {exc}; raise --max-iters\n")
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
