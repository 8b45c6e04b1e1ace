"""``fairdiv`` command line: run mechanisms, check axioms, replay the corpus, print the verdict grid."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

from fairdiv.axioms import AXIOMS, SEARCH_CAP, check
from fairdiv.core import CapacityError, DomainFlags, SchemaError, fraction_str
from fairdiv.corpus import FIXTURE_IDS, FIXTURES, generate_random, load_fixture, run_corpus
from fairdiv.mechanisms import SINCERE, MINIMUM_LIKE, MINIMUM_UTILITY, expected_utilities, get_mechanism, run
from fairdiv.oracles import DEFAULT_CAP
from fairdiv.serialize import (
    canonical_dumps,
    distribution_to_json,
    load_problem,
    strategy_from_json,
    verdict_to_json,
    witness_to_json,
)

EXIT_FAILED = 1
EXIT_SCHEMA = 2
EXIT_CAPACITY = 3

REPORT_AXIOMS = ("sp", "osp", "efa", "ef1", "efx", "pea", "pep")
DOMAIN_WORDS = ("identical", "additive", "nonzero_marginals", "zero_one_marginals", "positive_additive")


def _problem(args):
    if args.fixture:
        return load_fixture(args.fixture).problem
    if args.problem:
        return load_problem(args.problem)
    if args.seed is not None:
        flags = {w: True for w in (args.domain or "").replace("-", "_").split(",") if w}
        unknown = set(flags) - set(DOMAIN_WORDS)
        if unknown:
            raise SchemaError(f"unknown domain flags {sorted(unknown)}")
        return generate_random(DomainFlags(**flags), args.agents, args.items, args.seed)
    raise SchemaError("give --problem FILE, --fixture ID or --seed N")


def _add_source(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group()
    src.add_argument("--problem", metavar="FILE", help="problem JSON file")
    src.add_argument("--fixture", metavar="ID", choices=FIXTURE_IDS, help="built-in fixture id")
    src.add_argument("--seed", type=int, help="generate a random problem with this seed")
    p.add_argument("--agents", type=int, default=2, help="agents for --seed (default 2)")
    p.add_argument("--items", type=int, default=3, help="items for --seed (default 3)")
    p.add_argument("--domain", default="", help="comma-separated domain flags for --seed")


def _fmt_alloc(problem, alloc) -> str:
    return "(" + ", ".join("{" + ",".join(problem.names(b)) + "}" for b in alloc) + ")"


def cmd_run(args) -> int:
    problem = _problem(args)
    mech = get_mechanism(args.mechanism)
    strategy = SINCERE
    if args.strategy:
        with open(args.strategy) as fh:
            strategy = strategy_from_json(problem, json.load(fh))
    dist = run(problem, mech, strategy)
    eu = expected_utilities(problem, dist)
    if args.json:
        print(canonical_dumps({
            "mechanism": mech.name,
            "distribution": distribution_to_json(problem, dist),
            "expected_utilities": [[fraction_str(v) for v in row] for row in eu],
        }))
        return 0
    print(f"{mech.name}: {len(dist)} allocation(s)")
    for entry in distribution_to_json(problem, dist):
        alloc = tuple(problem.mask_of(b) for b in entry["bundles"])
        print(f"  {entry['probability']:>8}  {_fmt_alloc(problem, alloc)}")
    print("expected utilities (row i values bundle of column k):")
    for i, row in enumerate(eu):
        print(f"  agent {i + 1}: " + "  ".join(f"{fraction_str(v):>6}" for v in row))
    return 0


def cmd_check(args) -> int:
    problem = _problem(args)
    mech = get_mechanism(args.mechanism)
    axioms = args.axiom or list(AXIOMS)
    verdicts = [check(problem, mech, a, cap=args.cap, budget=args.search_cap) for a in axioms]
    if args.json:
        print(canonical_dumps([verdict_to_json(problem, v) for v in verdicts]))
        return 0
    for v in verdicts:
        status = "holds" if v.holds else "fails"
        if v.holds and v.bounded:
            status = "no violation found within lattice"
        print(f"{v.axiom.upper():4} {status}")
        if v.witness is not None:
            print(f"     witness: {canonical_dumps(witness_to_json(problem, v.witness))}")
        if v.search_scope:
            print(f"     scope: {v.search_scope}")
    return 0


def cmd_corpus(args) -> int:
    outcomes = run_corpus()
    bad = [o for o in outcomes if not o.ok]
    if args.json:
        print(canonical_dumps([
            {"fixture": o.fixture, "subject": o.subject, "axiom": o.axiom,
             "expected": o.expected, "actual": o.actual, "pass": o.ok}
            for o in outcomes
        ]))
    else:
        for o in outcomes:
            mark = "PASS" if o.ok else "FAIL"
            print(f"{mark} {o.fixture:4} {o.subject:34} {o.axiom:17} expected={o.expected} actual={o.actual}")
        print(f"{len(outcomes) - len(bad)}/{len(outcomes)} expectations hold")
    return EXIT_FAILED if bad else 0


def _cell(verdict) -> str:
    if not verdict.holds:
        return "x"
    return "ok*" if verdict.bounded else "ok"


def cmd_report(args) -> int:
    rows = []
    for fid, fx in FIXTURES.items():
        for mech in (MINIMUM_LIKE, MINIMUM_UTILITY):
            cells = {a: check(fx.problem, mech, a, cap=args.cap, budget=args.search_cap) for a in REPORT_AXIOMS}
            rows.append((fid, mech.name, cells))
    if args.json:
        print(canonical_dumps([
            {"fixture": fid, "mechanism": name,
             "verdicts": {a: {"holds": v.holds, "bounded": v.bounded} for a, v in cells.items()}}
            for fid, name, cells in rows
        ]))
        return 0
    header = f"{'fixture':8}{'mechanism':17}" + "".join(f"{a.upper():>6}" for a in REPORT_AXIOMS)
    print(header)
    print("-" * len(header))
    for fid, name, cells in rows:
        print(f"{fid:8}{name:17}" + "".join(f"{_cell(cells[a]):>6}" for a in REPORT_AXIOMS))
    print()
    print("ok = holds, x = does not hold, ok* = no violation found within the misreport lattice")
    print("T6a/T6b: each table defeats one branch of the first move (agent 1 may receive o1, or")
    print("agent 2 always does); a single static table cannot refute EF1 for every mechanism, so")
    print("the corpus searches all EF1-consistent continuations of the forced first move instead.")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fairdiv", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="print the exact outcome distribution and expected utilities")
    _add_source(p)
    p.add_argument("--mechanism", required=True)
    p.add_argument("--strategy", metavar="FILE", help="deviation strategy JSON")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("check", help="check axioms for a mechanism under sincere play")
    _add_source(p)
    p.add_argument("--mechanism", required=True)
    p.add_argument("--axiom", action="append", choices=AXIOMS)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="max allocations enumerated")
    p.add_argument("--search-cap", type=int, default=SEARCH_CAP, help="max misreport evaluations")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("corpus", help="replay every fixture expectation")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_corpus)

    p = sub.add_parser("report", help="verdict grid per fixture for minimum-like and minimum-utility")
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--search-cap", type=int, default=SEARCH_CAP)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    for name in ("cap", "search_cap"):
        if getattr(args, name, 1) < 1:
            print(f"fairdiv: --{name.replace('_', '-')} must be positive", file=sys.stderr)
            return EXIT_SCHEMA
    try:
        return args.func(args)
    except SchemaError as exc:
        print(f"fairdiv: schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except CapacityError as exc:
        print(f"fairdiv: capacity error: {exc}", file=sys.stderr)
        return EXIT_CAPACITY


if __name__ == "__main__":
    sys.exit(main())
