"""Verifiers for the fairness, efficiency and incentive axioms.

Distribution-level checks (EF ex post/ex ante, EF1, EFX, PE ex post/ex
ante) work on an exact :class:`AllocationDistribution`.  Incentive checks
(SP, OSP, GSP) search misreports over a finite lattice of bids by backward
induction on the mechanism's decision tree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence

from fairdiv.core import (
    AllocationDistribution,
    Problem,
    ef1_witness,
    efx_witness,
    envy_witness,
    marginal_values,
    residual_envies,
)
from fairdiv.mechanisms import (
    SINCERE,
    Mechanism,
    MechanismState,
    StrategyProfile,
    expand,
    expected_utilities,
    run,
    sincere_bids,
    with_item,
)
from fairdiv.oracles import (
    DEFAULT_CAP,
    allocation_key,
    dominance_slack,
    enumerate_allocations,
    pareto_dominator,
)

SEARCH_CAP = 200_000

AXIOMS = ("sp", "osp", "gsp", "efp", "efa", "ef1", "efx", "pep", "pea")


@dataclass(frozen=True)
class Verdict:
    """Outcome of one axiom check.

    ``bounded`` marks a ``holds`` verdict that only means no violation was
    found inside ``search_scope``.  Failing verdicts always carry a witness.
    """

    axiom: str
    holds: bool
    witness: Optional[dict] = None
    search_scope: Optional[str] = None
    bounded: bool = False

    def __bool__(self) -> bool:
        return self.holds


def _support(dist: AllocationDistribution) -> list:
    return sorted(dist.support, key=allocation_key)


# -- envy --------------------------------------------------------------------

def check_efp(problem: Problem, dist: AllocationDistribution) -> Verdict:
    for alloc in _support(dist):
        w = envy_witness(problem, alloc)
        if w is not None:
            i, k = w
            return Verdict("efp", False, {
                "allocation": alloc, "envious": i, "envied": k,
                "own": problem.value(i, alloc[i]), "other": problem.value(i, alloc[k]),
            })
    return Verdict("efp", True)


def check_efa(problem: Problem, dist: AllocationDistribution) -> Verdict:
    eu = expected_utilities(problem, dist)
    for i in range(problem.n):
        for k in range(problem.n):
            if eu[i][k] > eu[i][i]:
                return Verdict("efa", False, {"envious": i, "envied": k, "own": eu[i][i], "other": eu[i][k]})
    return Verdict("efa", True)


def _up_to_one(axiom: str, finder: Callable) -> Callable:
    def check(problem: Problem, dist: AllocationDistribution) -> Verdict:
        for alloc in _support(dist):
            w = finder(problem, alloc)
            if w is not None:
                i, k = w
                return Verdict(axiom, False, {
                    "allocation": alloc, "envious": i, "envied": k,
                    "residual_envies": residual_envies(problem, alloc, i, k),
                })
        return Verdict(axiom, True)

    check.__name__ = f"check_{axiom}"
    return check


check_ef1 = _up_to_one("ef1", ef1_witness)
check_ef1.__doc__ = "EF1: every envy in every support allocation vanishes after removing some item."
check_efx = _up_to_one("efx", efx_witness)
check_efx.__doc__ = "EFX: every envy vanishes after removing any item the envious agent values positively."


# -- Pareto efficiency -------------------------------------------------------

def check_pep(problem: Problem, dist: AllocationDistribution, cap: int = DEFAULT_CAP) -> Verdict:
    allocs = enumerate_allocations(problem.n, problem.m, cap)
    for alloc in _support(dist):
        better = pareto_dominator(problem, alloc, allocs)
        if better is not None:
            return Verdict("pep", False, {
                "allocation": alloc, "dominated_by": better,
                "profile": problem.profile(alloc), "dominating_profile": problem.profile(better),
            })
    return Verdict("pep", True, search_scope=f"all {len(allocs)} allocations")


def deterministic_profiles(problem: Problem, cap: int = DEFAULT_CAP) -> dict:
    """Distinct utility profiles of full allocations, each with its first allocation."""
    out: dict = {}
    for alloc in enumerate_allocations(problem.n, problem.m, cap):
        out.setdefault(problem.profile(alloc), alloc)
    return out


def check_pea(problem: Problem, dist: AllocationDistribution, cap: int = DEFAULT_CAP) -> Verdict:
    eu = expected_utilities(problem, dist)
    target = [eu[i][i] for i in range(problem.n)]
    reps = deterministic_profiles(problem, cap)
    profiles = list(reps)
    slack, weights = dominance_slack(target, profiles)
    scope = f"exact LP over {len(profiles)} distinct deterministic profiles"
    if slack is None or slack == 0:
        return Verdict("pea", True, search_scope=scope)
    mixture = [(reps[q], w) for q, w in zip(profiles, weights) if w]
    mixed = tuple(sum((w * q[i] for q, w in zip(profiles, weights)), Fraction(0)) for i in range(problem.n))
    return Verdict("pea", False, {
        "expected": tuple(target), "dominating": mixed, "slack": slack, "mixture": mixture,
    }, search_scope=scope)


# -- incentives ----------------------------------------------------------------

def misreport_lattice(problem: Problem) -> list[Fraction]:
    """Zero, every true marginal value, midpoints between neighbours, and one above the max."""
    values = sorted(set(marginal_values(problem)) | {Fraction(0)})
    mids = [(a + b) / 2 for a, b in zip(values, values[1:])]
    return sorted(set(values) | set(mids) | {values[-1] + 1})


def _candidates(mech: Mechanism, lattice: Sequence[Fraction], sincere: Fraction,
                reduce: bool, horizon_now: bool = False) -> list[Fraction]:
    """Sincere bid first, then one representative per behaviourally distinct misreport.

    Bids the rule cannot tell apart collapse, unless declared utilities carry
    them into later rounds.  At a one-round horizon that carry-over is moot.
    """
    ordered = [sincere] + [v for v in lattice if v != sincere]
    if not reduce or (mech.uses_declared and not horizon_now) or mech.bid_view == "order":
        return ordered
    if mech.bid_view == "none":
        return [sincere]
    seen, out = set(), []
    for v in ordered:
        if (v > 0) not in seen:
            seen.add(v > 0)
            out.append(v)
    return out


def _exact_within_lattice(mech: Mechanism, reduce: bool, horizon_now: bool = False) -> bool:
    # only when the rule reads bids by sign or not at all does the lattice
    # cover every behaviour the real bid space can produce
    return mech.bid_view in ("none", "sign") and (not mech.uses_declared or horizon_now)


class _BudgetExceeded(Exception):
    pass


def _coalition_value(problem: Problem, mech: Mechanism, coalition: Sequence[int],
                     strategy: StrategyProfile) -> Fraction:
    eu = expected_utilities(problem, run(problem, mech, strategy))
    return sum((eu[i][i] for i in coalition), Fraction(0))


def _best_joint_deviation(problem: Problem, mech: Mechanism, coalition: tuple,
                          options: Callable[[int, Fraction], list], budget: int):
    """Backward induction over the decision tree; returns (value, strategy, states)."""
    n, m = problem.n, problem.m
    memo: dict = {}
    policy: dict = {}
    spent = [0]

    def key(alloc, declared):
        return (alloc, declared) if mech.uses_declared else alloc

    def value(alloc, declared, j):
        if j == m:
            return sum((problem.value(i, alloc[i]) for i in coalition), Fraction(0))
        kk = key(alloc, declared)
        if kk in memo:
            return memo[kk]
        sincere = sincere_bids(problem, alloc, j)
        state = MechanismState(j + 1, alloc, declared)
        best, best_choice = None, None
        for choice in itertools.product(*(options(i, sincere[i]) for i in coalition)):
            spent[0] += 1
            if spent[0] > budget:
                raise _BudgetExceeded
            bids = list(sincere)
            for i, v in zip(coalition, choice):
                bids[i] = v
            shares = mech.rule(state, tuple(bids))
            total = Fraction(0)
            for k, share in enumerate(shares):
                if share:
                    dec = list(declared)
                    dec[k] += bids[k]
                    total += share * value(with_item(alloc, k, j), tuple(dec), j + 1)
            if best is None or total > best:
                best, best_choice = total, choice
        memo[kk] = best
        policy[kk] = best_choice
        return best

    zero = (Fraction(0),) * n
    best = value((0,) * n, zero, 0)

    # walk the optimal policy forward and record where it departs from sincere play
    deviations = {}
    frontier = {((0,) * n, zero)}
    for j in range(m):
        nxt = set()
        for alloc, declared in sorted(frontier, key=lambda s: (allocation_key(s[0]), s[1])):
            sincere = sincere_bids(problem, alloc, j)
            bids = list(sincere)
            for i, v in zip(coalition, policy[key(alloc, declared)]):
                bids[i] = v
                if v != sincere[i]:
                    deviations[(i, j + 1, alloc)] = v
            shares = mech.rule(MechanismState(j + 1, alloc, declared), tuple(bids))
            for k, share in enumerate(shares):
                if share:
                    dec = list(declared)
                    dec[k] += bids[k]
                    nxt.add((with_item(alloc, k, j), tuple(dec)))
        frontier = nxt
    return best, StrategyProfile(deviations), len(memo)


def _single_node_deviations(problem: Problem, mech: Mechanism, coalition: tuple,
                            lattice: Sequence[Fraction], sincere_value: Fraction, budget: int):
    """Try every one-node, one-member misreport at sincerely reachable nodes."""
    tried = 0
    tree = expand(problem, mech, SINCERE, 0)
    for j in range(problem.m):
        nodes = sorted({alloc for alloc, _ in tree}, key=allocation_key)
        for alloc in nodes:
            sincere = sincere_bids(problem, alloc, j)
            for i in coalition:
                for v in lattice:
                    if v == sincere[i]:
                        continue
                    tried += 1
                    if tried > budget:
                        return None, tried, False
                    profile = StrategyProfile({(i, j + 1, alloc): v})
                    val = _coalition_value(problem, mech, coalition, profile)
                    if val > sincere_value:
                        return (val, profile), tried, True
        tree = expand(problem, mech, SINCERE, j + 1)
    return None, tried, True


def _coalition_violation(problem: Problem, mech: Mechanism, coalition: tuple,
                         budget: int, reduce: bool):
    """Return ``(witness or None, scope, exact)`` for one coalition."""
    lattice = misreport_lattice(problem)
    sincere_value = _coalition_value(problem, mech, coalition, SINCERE)
    exact = _exact_within_lattice(mech, reduce)

    def full(i, s):
        return _candidates(mech, lattice, s, reduce)

    def zero_or_sincere(i, s):
        return [s] if s == 0 else [s, Fraction(0)]

    def found(value, profile, scope):
        deviant = _coalition_value(problem, mech, coalition, profile)
        assert deviant == value, "re-run of the deviation disagrees with the search"
        return {
            "coalition": coalition, "strategy": profile,
            "sincere": sincere_value, "deviant": deviant,
        }, scope

    try:
        value, profile, states = _best_joint_deviation(problem, mech, coalition, full, budget)
        scope = (f"optimal joint misreport over lattice of {len(lattice)} bids "
                 f"at every node ({states} decision states)")
        if value > sincere_value:
            return (*found(value, profile, scope), exact)
        if exact:
            scope += "; lattice covers every distinguishable bid"
        return None, scope, exact
    except _BudgetExceeded:
        pass

    parts = []
    try:
        value, profile, states = _best_joint_deviation(problem, mech, coalition, zero_or_sincere, budget)
        scope = f"all zero-bid node subsets ({states} decision states)"
        if value > sincere_value:
            return (*found(value, profile, scope), False)
        parts.append(scope)
    except _BudgetExceeded:
        parts.append("zero-bid subsets skipped (over search cap)")
    hit, tried, complete = _single_node_deviations(problem, mech, coalition, lattice, sincere_value, budget)
    scope = f"{tried} single-node lattice misreports" + ("" if complete else " (truncated at search cap)")
    if hit is not None:
        return (*found(hit[0], hit[1], scope), False)
    parts.append(scope)
    return None, "; ".join(parts), False


def check_sp(problem: Problem, mech: Mechanism, budget: int = SEARCH_CAP, reduce: bool = True) -> Verdict:
    """Strategy-proofness with full knowledge of the item sequence, one deviator at a time."""
    scopes = []
    exact_all = True
    for i in range(problem.n):
        witness, scope, exact = _coalition_violation(problem, mech, (i,), budget, reduce)
        if witness is not None:
            return Verdict("sp", False, witness, f"agent {i + 1}: {scope}")
        scopes.append(f"agent {i + 1}: {scope}")
        exact_all &= exact
    return Verdict("sp", True, search_scope="; ".join(scopes), bounded=not exact_all)


def check_gsp(problem: Problem, mech: Mechanism, budget: int = SEARCH_CAP, reduce: bool = True) -> Verdict:
    """Group strategy-proofness: no coalition raises the sum of its members' expected utilities."""
    scopes = []
    exact_all = True
    for size in range(1, problem.n + 1):
        for coalition in itertools.combinations(range(problem.n), size):
            witness, scope, exact = _coalition_violation(problem, mech, coalition, budget, reduce)
            label = "{" + ",".join(str(i + 1) for i in coalition) + "}"
            if witness is not None:
                return Verdict("gsp", False, witness, f"coalition {label}: {scope}")
            scopes.append(f"coalition {label}: {scope}")
            exact_all &= exact
    return Verdict("gsp", True, search_scope="; ".join(scopes), bounded=not exact_all)


def check_osp(problem: Problem, mech: Mechanism, reduce: bool = True) -> Verdict:
    """Online strategy-proofness: at each sincerely reachable node, the current round is the horizon."""
    lattice = misreport_lattice(problem)
    tree = expand(problem, mech, SINCERE, 0)
    checked = 0
    for j in range(problem.m):
        for alloc, declared in sorted(tree, key=lambda s: (allocation_key(s[0]), s[1])):
            state = MechanismState(j + 1, alloc, declared)
            sincere = sincere_bids(problem, alloc, j)
            base = mech.rule(state, tuple(sincere))
            for i in range(problem.n):
                now = problem.value(i, alloc[i])
                honest = now + base[i] * sincere[i]
                for v in _candidates(mech, lattice, sincere[i], reduce, horizon_now=True)[1:]:
                    checked += 1
                    bids = list(sincere)
                    bids[i] = v
                    shares = mech.rule(state, tuple(bids))
                    got = now + shares[i] * sincere[i]
                    if got > honest:
                        return Verdict("osp", False, {
                            "agent": i, "round": j + 1, "allocation": alloc, "declared": v,
                            "sincere": honest, "deviant": got,
                        })
        tree = expand(problem, mech, SINCERE, j + 1)
    exact = _exact_within_lattice(mech, reduce, horizon_now=True)
    scope = f"{checked} single-node misreports over a lattice of {len(lattice)} bids"
    return Verdict("osp", True, search_scope=scope, bounded=not exact)


def check(problem: Problem, mech: Mechanism, axiom: str, dist: Optional[AllocationDistribution] = None,
          cap: int = DEFAULT_CAP, budget: int = SEARCH_CAP) -> Verdict:
    """Dispatch one axiom by name; ``dist`` defaults to the sincere outcome of ``mech``."""
    axiom = axiom.lower()
    if axiom == "sp":
        return check_sp(problem, mech, budget)
    if axiom == "gsp":
        return check_gsp(problem, mech, budget)
    if axiom == "osp":
        return check_osp(problem, mech)
    if dist is None:
        dist = run(problem, mech)
    if axiom == "efp":
        return check_efp(problem, dist)
    if axiom == "efa":
        return check_efa(problem, dist)
    if axiom == "ef1":
        return check_ef1(problem, dist)
    if axiom == "efx":
        return check_efx(problem, dist)
    if axiom == "pep":
        return check_pep(problem, dist, cap)
    if axiom == "pea":
        return check_pea(problem, dist, cap)
    raise ValueError(f"unknown axiom {axiom!r}; expected one of {AXIOMS}")

