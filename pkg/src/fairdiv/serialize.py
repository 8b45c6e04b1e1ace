"""JSON encodings for problems, distributions, strategies and verdicts.

Rationals are always written as ``"p/q"`` strings (``"3"`` for integers) and
agents are numbered from 1 in every external format.
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path
from typing import Any, Union

from fairdiv.core import (
    AllocationDistribution,
    Problem,
    SchemaError,
    UtilityFunction,
    fraction_str,
    to_fraction,
)
from fairdiv.mechanisms import StrategyProfile
from fairdiv.oracles import allocation_key


def canonical_dumps(data: Any) -> str:
    return json.dumps(data, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


# -- problems ------------------------------------------------------------------

def problem_from_json(data: dict) -> Problem:
    try:
        n = data["agents"]
        items = data["items"]
        utilities = data["utilities"]
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"problem JSON needs agents, items and utilities: missing {exc}") from exc
    if not isinstance(n, int) or isinstance(n, bool) or n < 1:
        raise SchemaError("agents must be a positive integer")
    if not isinstance(items, list) or not all(isinstance(o, str) for o in items):
        raise SchemaError("items must be a list of names")
    if not isinstance(utilities, list) or len(utilities) != n:
        raise SchemaError(f"expected {n} utilities")
    index = {name: o for o, name in enumerate(items)}
    if len(index) != len(items):
        raise SchemaError("item names must be distinct")
    m = len(items)

    parsed = []
    for spec in utilities:
        kind = spec.get("kind") if isinstance(spec, dict) else None
        if kind == "additive":
            values = spec.get("values")
            if not isinstance(values, list) or len(values) != m:
                raise SchemaError(f"additive utility needs {m} values")
            parsed.append(UtilityFunction.additive([to_fraction(v) for v in values]))
        elif kind == "table":
            entries = {}
            for entry in spec.get("entries", []):
                mask = 0
                for name in entry["bundle"]:
                    if name not in index:
                        raise SchemaError(f"unknown item {name!r} in table entry")
                    mask |= 1 << index[name]
                if mask in entries:
                    raise SchemaError(f"bundle {entry['bundle']} listed twice")
                entries[mask] = to_fraction(entry["value"])
            parsed.append(UtilityFunction.from_mapping(m, entries, items))
        else:
            raise SchemaError(f"utility kind must be 'table' or 'additive', got {kind!r}")
    return Problem(n, items, parsed)


def problem_to_json(problem: Problem) -> dict:
    utilities = []
    for u in problem.utilities:
        if u.is_shorthand:
            utilities.append({"kind": "additive", "values": [fraction_str(v) for v in u.item_values]})
        else:
            entries = [
                {"bundle": problem.names(mask), "value": fraction_str(u.value(mask))}
                for mask in sorted(range(1, 1 << problem.m), key=lambda b: (bin(b).count("1"), problem.names(b)))
            ]
            utilities.append({"kind": "table", "entries": entries})
    return {"agents": problem.n, "items": list(problem.items), "utilities": utilities}


def load_problem(path: Union[str, Path]) -> Problem:
    try:
        data = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: invalid JSON: {exc}") from exc
    return problem_from_json(data)


# -- allocations and distributions ---------------------------------------------

def allocation_to_json(problem: Problem, allocation) -> list:
    return [problem.names(b) for b in allocation]


def allocation_from_json(problem: Problem, bundles: list) -> tuple:
    if not isinstance(bundles, list) or len(bundles) != problem.n:
        raise SchemaError(f"an allocation lists exactly {problem.n} bundles")
    return tuple(problem.mask_of(b) for b in bundles)


def distribution_to_json(problem: Problem, dist: AllocationDistribution) -> list:
    return [
        {"bundles": allocation_to_json(problem, alloc), "probability": fraction_str(p)}
        for alloc, p in sorted(dist.items(), key=lambda kv: allocation_key(kv[0]))
    ]


def distribution_from_json(problem: Problem, data: list) -> AllocationDistribution:
    if not isinstance(data, list) or not data:
        raise SchemaError("a distribution is a nonempty list of {bundles, probability}")
    support = {}
    rounds = set()
    for entry in data:
        alloc = allocation_from_json(problem, entry["bundles"])
        if alloc in support:
            raise SchemaError(f"allocation {entry['bundles']} listed twice")
        support[alloc] = to_fraction(entry["probability"])
        rounds.add(sum(bin(b).count("1") for b in alloc))
    if len(rounds) != 1:
        raise SchemaError("allocations in one distribution must cover the same items")
    return AllocationDistribution(rounds.pop(), support)


# -- strategies ----------------------------------------------------------------

def strategy_from_json(problem: Problem, data: list) -> StrategyProfile:
    if not isinstance(data, list):
        raise SchemaError("a strategy file is a list of {agent, round, allocation, declared}")
    declared = {}
    for entry in data:
        try:
            agent = entry["agent"] - 1
            rnd = entry["round"]
            alloc = allocation_from_json(problem, entry["allocation"])
            value = to_fraction(entry["declared"])
        except (KeyError, TypeError) as exc:
            raise SchemaError(f"bad strategy entry {entry!r}") from exc
        if not 0 <= agent < problem.n:
            raise SchemaError(f"agent {agent + 1} outside 1..{problem.n}")
        if not 1 <= rnd <= problem.m:
            raise SchemaError(f"round {rnd} outside 1..{problem.m}")
        covered = 0
        for b in alloc:
            covered |= b
        if covered != (1 << (rnd - 1)) - 1:
            raise SchemaError(f"round {rnd} node must allocate exactly the first {rnd - 1} items")
        declared[(agent, rnd, alloc)] = value
    return StrategyProfile(declared)


def strategy_to_json(problem: Problem, strategy: StrategyProfile) -> list:
    rows = sorted(strategy.declared.items(), key=lambda kv: (kv[0][0], kv[0][1], allocation_key(kv[0][2])))
    return [
        {"agent": agent + 1, "round": rnd, "allocation": allocation_to_json(problem, alloc),
         "declared": fraction_str(v)}
        for (agent, rnd, alloc), v in rows
    ]


# -- verdicts --------------------------------------------------------------------

_ALLOCATION_KEYS = {"allocation", "dominated_by"}
_AGENT_KEYS = {"envious", "envied", "agent"}


def _plain(value: Any) -> Any:
    if isinstance(value, Fraction):
        return fraction_str(value)
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    return value


def witness_to_json(problem: Problem, witness: dict) -> dict:
    out = {}
    for key, value in witness.items():
        if key in _ALLOCATION_KEYS:
            out[key] = allocation_to_json(problem, value)
        elif key in _AGENT_KEYS:
            out[key] = value + 1
        elif key == "coalition":
            out[key] = [i + 1 for i in value]
        elif key == "residual_envies":
            out[key] = {problem.items[o]: fraction_str(r) for o, r in value.items()}
        elif key == "mixture":
            out[key] = [{"bundles": allocation_to_json(problem, a), "weight": fraction_str(w)} for a, w in value]
        elif key == "strategy":
            out[key] = strategy_to_json(problem, value)
        else:
            out[key] = _plain(value)
    return out


def verdict_to_json(problem: Problem, verdict) -> dict:
    return {
        "axiom": verdict.axiom,
        "holds": verdict.holds,
        "witness": None if verdict.witness is None else witness_to_json(problem, verdict.witness),
        "search_scope": verdict.search_scope,
    }
