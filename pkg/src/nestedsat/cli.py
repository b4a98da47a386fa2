"""Command-line interface: solve, check-nested, find-backdoor, gen."""

from __future__ import annotations

import argparse
import json
import random
import sys

from .backdoor import (
    approximate_backdoor,
    branch_search_backdoor,
    exact_smallest_backdoor,
)
from .formula import (
    CnfFormula,
    DimacsError,
    emit_dimacs,
    generate_family,
    parse_dimacs,
    random_formula,
)
from .incidence import build_incidence
from .nested import is_nested
from .obstruction import find_obstruction, serialize_obstruction
from .solver import solve

SUBCOMMANDS = ("solve", "check-nested", "find-backdoor", "gen")

EXIT_SOLVED = 0
EXIT_BUDGET = 1
EXIT_INPUT = 2


def _read_formula(path: str) -> CnfFormula:
    if path == "-":
        return parse_dimacs(sys.stdin.read())
    with open(path, "r", encoding="utf-8") as handle:
        return parse_dimacs(handle.read())


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nested-backdoor-sat",
        description=(
            "SAT and exact model counting through strong backdoor sets "
            "to nested CNF formulas"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("solve", help="decide SAT, optionally count models")
    ps.add_argument("file", help="DIMACS CNF file, or - for stdin")
    ps.add_argument("--count", action="store_true", help="compute the exact model count")
    ps.add_argument("--backdoor", help="use this strong backdoor, e.g. \"1 5 9\"")
    ps.add_argument("--backdoor-max", type=int, default=4, metavar="K",
                    help="largest backdoor size to search for (default 4)")
    group = ps.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true",
                       help="search for a minimum backdoor by enumeration")
    group.add_argument("--approx", action="store_true",
                       help="use the recursive approximation driver")
    ps.add_argument("--is-nested", action="store_true",
                    help="only report whether the formula is nested")
    ps.add_argument("--emit-witness", action="store_true",
                    help="include a nesting order or an obstruction record")
    ps.add_argument("--json", action="store_true", help="machine-readable output")

    pc = sub.add_parser("check-nested", help="test membership in the nested class")
    pc.add_argument("file")
    pc.add_argument("--emit-witness", action="store_true")
    pc.add_argument("--json", action="store_true")

    pf = sub.add_parser("find-backdoor", help="search for a strong backdoor")
    pf.add_argument("file")
    pf.add_argument("--backdoor-max", type=int, default=4, metavar="K")
    group = pf.add_mutually_exclusive_group()
    group.add_argument("--exact", action="store_true")
    group.add_argument("--approx", action="store_true")
    pf.add_argument("--json", action="store_true")

    pg = sub.add_parser("gen", help="write a generated formula as DIMACS")
    pg.add_argument("family", choices=("grid", "grid_plus_x", "disjoint_union", "random"))
    pg.add_argument("n", type=int, help="family size parameter")
    pg.add_argument("--seed", type=int, default=0, help="RNG seed (random family only)")
    pg.add_argument("--clauses", type=int, default=None,
                    help="clause count (random family only)")
    pg.add_argument("-o", "--output", default="-", help="output file (default stdout)")
    return parser


def _check_nested(formula: CnfFormula, emit_witness: bool, as_json: bool) -> int:
    nested = is_nested(formula)
    payload: dict = {"nested": nested}
    if emit_witness and not nested:
        witness = find_obstruction(build_incidence(formula))
        if witness is not None:
            payload["obstruction"] = serialize_obstruction(witness)
    if as_json:
        print(json.dumps(payload, indent=2))
    else:
        print(f"nested: {'true' if nested else 'false'}")
        if "obstruction" in payload:
            print(payload["obstruction"], end="")
    return EXIT_SOLVED


def _find_backdoor(args) -> int:
    formula = _read_formula(args.file)
    if args.exact:
        result = exact_smallest_backdoor(formula, args.backdoor_max)
    elif args.approx:
        result = approximate_backdoor(formula, args.backdoor_max)
    else:
        result = branch_search_backdoor(formula, args.backdoor_max)
    if result is None:
        if args.json:
            print(json.dumps({"status": "budget-exceeded"}, indent=2))
        else:
            print("budget-exceeded")
        return EXIT_BUDGET
    ids = sorted(result.variables)
    if args.json:
        print(json.dumps({"status": "found", "backdoor": ids, "kind": result.kind},
                         indent=2))
    else:
        print("backdoor: " + (" ".join(map(str, ids)) if ids else "(empty)"))
    return EXIT_SOLVED


def _gen(args) -> int:
    if args.family == "random":
        rng = random.Random(args.seed)
        n_clauses = args.clauses if args.clauses is not None else 2 * args.n
        formula = random_formula(rng, args.n, n_clauses)
    else:
        formula = generate_family(args.family, args.n)
    text = emit_dimacs(formula)
    if args.output == "-":
        sys.stdout.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as handle:
            handle.write(text)
    return EXIT_SOLVED


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:]) if argv is None else list(argv)
    if argv and argv[0] not in SUBCOMMANDS and argv[0] not in ("-h", "--help"):
        argv = ["solve"] + argv
    parser = _build_parser()
    args = parser.parse_args(argv)

    try:
        if args.command == "gen":
            return _gen(args)
        if args.command == "check-nested":
            formula = _read_formula(args.file)
            return _check_nested(formula, args.emit_witness, args.json)
        if args.command == "find-backdoor":
            return _find_backdoor(args)

        formula = _read_formula(args.file)
        if args.is_nested:
            return _check_nested(formula, args.emit_witness, args.json)
        backdoor = None
        if args.backdoor is not None:
            backdoor = [int(tok) for tok in args.backdoor.split()]
        mode = "exact" if args.exact else "approx" if args.approx else "branching"
        report = solve(
            formula,
            count=args.count,
            backdoor=backdoor,
            backdoor_max=args.backdoor_max,
            mode=mode,
            emit_witness=args.emit_witness,
        )
    except (DimacsError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    if args.json:
        print(json.dumps(report.to_json_dict(), indent=2))
    else:
        print(f"status: {report.status}")
        if report.count is not None:
            print(f"count: {report.count}")
        ids = " ".join(map(str, report.backdoor))
        print(f"backdoor: {ids if ids else '(empty)'}")
        for witness in report.witnesses:
            if witness.get("type") == "obstruction":
                print(witness["record"], end="")
            elif witness.get("type") == "nested" and witness.get("order"):
                print("order: " + " ".join(map(str, witness["order"])))
    return EXIT_BUDGET if report.status == "budget-exceeded" else EXIT_SOLVED


if __name__ == "__main__":
    raise SystemExit(main())
