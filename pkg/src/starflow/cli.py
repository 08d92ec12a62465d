"""``starflow`` command line.

Exit status: 0 when every check passes, 1 when some check fails, 2 on usage,
parse or validation errors.
"""

import argparse
import re
import sys

from .flows import BUILTIN_SYSTEMS
from .gaussian import as_rational
from .moyal import HBAR, MOYAL, star
from .parsing import ParseError, parse_series
from .reports import run_scenario, series_to_json
from .scenario import Scenario, ScenarioError, load_scenario
from .series import Context

__all__ = ["main", "build_parser"]

_TASK_OF = {
    "evolve": "evolve",
    "flow": "flow",
    "check": "canonicity",
    "verify-s": "verify-S",
    "solve-s": "solve-S",
    "compose": "compose",
}


def _global_flags(parser, suppress):
    default = argparse.SUPPRESS if suppress else None
    g = parser.add_argument_group("global options")
    g.add_argument("--hbar-order", type=int, default=default, help="truncation order in h")
    g.add_argument("--t-order", type=int, default=default, help="truncation order in t")
    g.add_argument("--out", default=default, help="also write the output to this file")
    g.add_argument(
        "--format", choices=("text", "json"), default=argparse.SUPPRESS if suppress else "text", help="output format"
    )
    g.add_argument(
        "--const",
        action="append",
        default=argparse.SUPPRESS if suppress else [],
        metavar="NAME=VALUE",
        help="exact rational constant, e.g. k=3/7 (repeatable)",
    )
    g.add_argument("--timing", action="store_true", default=argparse.SUPPRESS if suppress else False, help="report wall time")


def _system_flags(parser):
    src = parser.add_mutually_exclusive_group(required=True)
    src.add_argument("--builtin", choices=BUILTIN_SYSTEMS)
    src.add_argument("--hamiltonian", metavar="POLY", help="polynomial Hamiltonian literal (needs --dim)")
    parser.add_argument("--dim", type=int)
    parser.add_argument("--degree", type=int, default=4, help="monomial test degree")


def build_parser():
    parser = argparse.ArgumentParser(prog="starflow", description="Exact Moyal star products and quantum flows.")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("star", help="star product of two polynomial literals")
    p.add_argument("f")
    p.add_argument("g")
    p.add_argument("--dim", type=int, help="phase-space dimension (default: inferred)")
    _global_flags(p, suppress=True)

    for name, help_text in [
        ("evolve", "Heisenberg evolution of observables"),
        ("flow", "quantum flow of the coordinates"),
        ("check", "quantum and classical canonicity of the flow"),
        ("verify-s", "check an intertwiner against the flow"),
        ("solve-s", "construct the intertwiner order by order"),
        ("compose", "quantum composition law"),
    ]:
        p = sub.add_parser(name, help=help_text)
        _system_flags(p)
        _global_flags(p, suppress=True)
        if name == "evolve":
            p.add_argument("--observable", action="append", default=[], help="polynomial literal or H (repeatable)")
        if name in ("verify-s", "compose"):
            p.add_argument("--operator", help="S as a literal, exp(<literal>), builtin or solve (default: builtin)")
        if name in ("verify-s", "solve-s"):
            p.add_argument("--order", type=int, help="h order of the check (default: hbar order)")
        if name == "solve-s":
            p.add_argument("--max-derivative-order", type=int, default=3)
            p.add_argument("--max-coeff-degree", type=int, default=6)
        if name == "compose":
            p.add_argument("--compose-order", type=int, default=3, help="truncation in each of t1, t2")

    p = sub.add_parser("run", help="run a scenario file")
    p.add_argument("scenario")
    _global_flags(p, suppress=True)
    return parser


def _constants(items):
    out = {}
    for item in items:
        if "=" not in item:
            raise ScenarioError(f"constant {item!r} must be NAME=VALUE")
        name, value = item.split("=", 1)
        try:
            out[name.strip()] = as_rational(value.strip())
        except (ValueError, TypeError):
            raise ScenarioError(f"constant {name.strip()!r} is not an exact rational") from None
    return out


def _infer_dim(*texts):
    found = [int(m) for t in texts for m in re.findall(r"\b[xp](\d+)\b", t)]
    return max(found, default=1)


def _emit(text, args):
    sys.stdout.write(text)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)


def _run_star(args, constants):
    dim = args.dim or _infer_dim(args.f, args.g)
    K = 4 if args.hbar_order is None else args.hbar_order
    ctx = Context(dim, (HBAR,), (K,))
    result = star(MOYAL, parse_series(args.f, ctx, constants), parse_series(args.g, ctx, constants))
    if args.format == "json":
        import json

        _emit(json.dumps(series_to_json(result), indent=2) + "\n", args)
    else:
        _emit(result.to_text() + "\n", args)
    return 0


def _scenario_from_args(args, constants):
    sc = Scenario(
        name=args.builtin or "custom",
        hamiltonian=f"builtin:{args.builtin}" if args.builtin else args.hamiltonian,
        dim=args.dim,
        constants=constants,
        monomial_test_degree=args.degree,
        tasks=(_TASK_OF[args.command],),
    )
    if args.hbar_order is not None:
        sc.hbar_order = args.hbar_order
    if args.t_order is not None:
        sc.t_order = args.t_order
    sc.observables = tuple(getattr(args, "observable", ()) or ())
    if getattr(args, "operator", None):
        sc.S = args.operator
    if getattr(args, "order", None) is not None:
        sc.verify_order = args.order
    if args.command == "solve-s":
        sc.solve_derivative_order = args.max_derivative_order
        sc.solve_coeff_degree = args.max_coeff_degree
    if args.command == "compose":
        sc.compose_order = args.compose_order
    return sc.validate()


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        constants = _constants(args.const)
        if args.command == "star":
            return _run_star(args, constants)
        if args.command == "run":
            sc = load_scenario(args.scenario)
            if args.hbar_order is not None:
                sc.hbar_order = args.hbar_order
            if args.t_order is not None:
                sc.t_order = args.t_order
            if constants:
                sc.constants = {**sc.constants, **constants}
            sc.validate()
        else:
            sc = _scenario_from_args(args, constants)
        report = run_scenario(sc, timing=args.timing)
    except (ScenarioError, ParseError, OSError) as exc:
        print(f"starflow: error: {exc}", file=sys.stderr)
        return 2
    _emit(report.render(args.format), args)
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
