"""Command-line driver.

Exit codes: 0 when everything holds, 1 for a negative verdict, 2 for usage,
parse, well-formedness or resource errors.
"""

from __future__ import annotations

import argparse
import sys
from typing import Optional, Sequence

from .checker import CheckError, Labeler, check
from .equivalence import check_operational_equivalence
from .parser import ParseError, parse_choreography, parse_properties, render_program
from .projection import project
from .semantics import WellFormednessError, build_system, uninitialized_variables
from .statespace import (
    DEFAULT_LIMIT, ExplorationLimitError, explore_system, export_aut, export_dot, export_json,
)

EXIT_OK, EXIT_NEGATIVE, EXIT_ERROR = 0, 1, 2


class _Failure(Exception):
    pass


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise _Failure(f"{path}: {exc.strerror}") from None


def _load(path: str):
    try:
        chor = parse_choreography(_read(path))
    except ParseError as exc:
        raise _Failure(f"{path}:{exc}") from None
    try:
        build_system(chor, "global")
    except WellFormednessError as exc:
        raise _Failure(f"{path}: {exc}") from None
    for process, var in uninitialized_variables(chor):
        print(f"warning: {path}: variable {process}.{var} is not initialized", file=sys.stderr)
    return chor


def _explore(chor, side: str, limit: int):
    return explore_system(build_system(chor, side), limit)


def cmd_parse(args) -> int:
    chor = _load(args.file)
    print(f"main = {render_program(chor.main)}")
    print(f"processes: {', '.join(chor.processes)}")
    variables = [f"{p}.{v}" for p in chor.processes for v, _ in chor.stores.get(p, [])]
    print(f"variables: {', '.join(variables) if variables else '(none)'}")
    print(f"actions: {chor.main.size}")
    return EXIT_OK


def cmd_project(args) -> int:
    chor = _load(args.file)
    if args.role is not None:
        if args.role not in chor.processes:
            raise _Failure(f"unknown role {args.role!r}")
        roles = [args.role]
    else:
        roles = sorted(chor.main.subjects)
    for role in roles:
        print(f"{role}: {render_program(project(chor.main, role))}")
    return EXIT_OK


def cmd_lts(args) -> int:
    chor = _load(args.file)
    lts = _explore(chor, args.side, args.limit)
    if args.stats:
        print(f"states: {lts.size}")
        print(f"edges: {len(lts.edges)}")
        print(f"dead: {len(lts.dead_states())}")
        return EXIT_OK
    export = {"aut": export_aut, "dot": export_dot, "json": export_json}[args.format]
    sys.stdout.write(export(lts))
    return EXIT_OK


def _equiv(chor, limit: int):
    return check_operational_equivalence(chor.main, limit)


def cmd_equiv(args) -> int:
    chor = _load(args.file)
    result = _equiv(chor, args.limit)
    print(f"program states: global {result.global_states}, local {result.local_states}")
    if result.equivalent:
        print("EQUIVALENT")
        return EXIT_OK
    print("NOT EQUIVALENT")
    if result.trace:
        print(f"the {result.trace_side} side can do the following and the other side cannot follow:")
        for label in result.trace:
            print(f"TRACE: {label}")
    return EXIT_NEGATIVE


def cmd_check(args) -> int:
    chor = _load(args.file)
    try:
        props = parse_properties(_read(args.props), chor.processes, literal_ag=args.literal_ag)
    except ParseError as exc:
        raise _Failure(f"{args.props}:{exc}") from None
    side = args.side
    if side == "auto":
        if _equiv(chor, args.limit).equivalent:
            side = "global"
        else:
            side = "local"
            print("warning: program is not equivalent to its projections; "
                  "checking the local system", file=sys.stderr)
    lts = _explore(chor, side, args.limit)
    labeler = Labeler(lts, observer_atoms=not args.strict_atoms)
    all_hold = True
    for name, formula in props:
        verdict = check(lts, formula, chor.processes, labeler=labeler)
        all_hold &= verdict.holds
        print(f"PROP {name}: {'HOLDS' if verdict.holds else 'VIOLATED'}")
        for line in verdict.trace_lines():
            print(line)
    return EXIT_OK if all_hold else EXIT_NEGATIVE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="isochor",
        description="Parse, project, explore and model-check choreographies.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def limit_flag(p):
        p.add_argument("--limit", type=int, default=DEFAULT_LIMIT,
                       help=f"maximum number of states to explore (default {DEFAULT_LIMIT})")

    p = sub.add_parser("parse", help="parse and summarize a choreography")
    p.add_argument("file")
    p.set_defaults(run=cmd_parse)

    p = sub.add_parser("project", help="print projections")
    p.add_argument("file")
    p.add_argument("--role")
    p.set_defaults(run=cmd_project)

    p = sub.add_parser("lts", help="explore a system and export its LTS")
    p.add_argument("file")
    p.add_argument("--side", choices=("global", "local"), default="global")
    p.add_argument("--format", choices=("aut", "dot", "json"), default="aut")
    p.add_argument("--stats", action="store_true", help="print state, edge and dead counts only")
    limit_flag(p)
    p.set_defaults(run=cmd_lts)

    p = sub.add_parser("equiv", help="compare a program with its projections")
    p.add_argument("file")
    limit_flag(p)
    p.set_defaults(run=cmd_equiv)

    p = sub.add_parser("check", help="model-check properties")
    p.add_argument("file")
    p.add_argument("--props", required=True)
    p.add_argument("--side", choices=("auto", "global", "local"), default="auto")
    p.add_argument("--literal-ag", action="store_true",
                   help="expand AG(f) to EU(tt, !f) instead of its dual")
    p.add_argument("--strict-atoms", action="store_true",
                   help="evaluate p:(E) as a permission-checked read by p")
    limit_flag(p)
    p.set_defaults(run=cmd_check)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.run(args)
    except _Failure as exc:
        print(f"error: {exc}", file=sys.stderr)
    except ExplorationLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
    except (CheckError, WellFormednessError) as exc:
        print(f"error: {exc}", file=sys.stderr)
    return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
