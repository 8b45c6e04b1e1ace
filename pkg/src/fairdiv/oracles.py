"""Brute-force offline oracles and an exact rational simplex."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence

from fairdiv.core import (
    Allocation,
    CapacityError,
    Problem,
    ef1_witness,
    efx_witness,
    envy_witness,
    is_partition,
    items_of,
)

DEFAULT_CAP = 4096


def allocation_key(allocation: Allocation) -> tuple:
    """Sort key: bundles as sorted item tuples, compared agent by agent."""
    return tuple(tuple(items_of(b)) for b in allocation)


def enumerate_allocations(n: int, j: int, cap: int = DEFAULT_CAP) -> list[Allocation]:
    """All ``n ** j`` allocations of the first ``j`` items, in lexicographic order."""
    if n ** j > cap:
        raise CapacityError(f"{n}^{j} = {n ** j} allocations exceeds cap {cap}")
    allocs = []
    for owners in itertools.product(range(n), repeat=j):
        bundles = [0] * n
        for o, i in enumerate(owners):
            bundles[i] |= 1 << o
        allocs.append(tuple(bundles))
    allocs.sort(key=allocation_key)
    return allocs


def pareto_dominator(problem: Problem, allocation: Allocation,
                     candidates: Iterable[Allocation]) -> Optional[Allocation]:
    """First candidate giving everyone at least as much and someone strictly more."""
    base = problem.profile(allocation)
    for other in candidates:
        prof = problem.profile(other)
        if all(a >= b for a, b in zip(prof, base)) and prof != base:
            return other
    return None


PROPERTIES = ("EF", "EF1", "EFX", "PEP")


def offline_exists(problem: Problem, prop: str, cap: int = DEFAULT_CAP) -> Optional[Allocation]:
    """Lexicographically first full allocation with the property, or ``None``."""
    prop = prop.upper()
    if prop not in PROPERTIES:
        raise ValueError(f"unknown property {prop!r}; expected one of {PROPERTIES}")
    allocs = enumerate_allocations(problem.n, problem.m, cap)
    for alloc in allocs:
        if prop == "EF":
            ok = envy_witness(problem, alloc) is None
        elif prop == "EF1":
            ok = ef1_witness(problem, alloc) is None
        elif prop == "EFX":
            ok = efx_witness(problem, alloc) is None
        else:
            ok = pareto_dominator(problem, alloc, allocs) is None
        if ok:
            return alloc
    return None


@dataclass
class ContinuationSearch:
    explored: int
    dead_ends: list = field(default_factory=list)
    completions: list = field(default_factory=list)


def ef1_continuations(problem: Problem, start: Allocation, start_round: int) -> ContinuationSearch:
    """Extend ``start`` item by item, keeping every prefix EF1, and collect full EF1 allocations.

    ``start`` must partition the first ``start_round`` items.  An online
    mechanism cannot tell whether more items follow, so an EF1 mechanism has
    to produce an EF1 allocation at every prefix.
    """
    if not is_partition(start, start_round):
        raise ValueError(f"{start} does not partition the first {start_round} items")
    result = ContinuationSearch(explored=0)
    stack = [(start, start_round)]
    while stack:
        alloc, j = stack.pop()
        result.explored += 1
        if j == problem.m:
            result.completions.append(alloc)
            continue
        extended = False
        for k in range(problem.n):
            nxt = list(alloc)
            nxt[k] |= 1 << j
            nxt = tuple(nxt)
            if ef1_witness(problem, nxt) is None:
                stack.append((nxt, j + 1))
                extended = True
        if not extended:
            result.dead_ends.append(alloc)
    result.completions.sort(key=allocation_key)
    result.dead_ends.sort(key=allocation_key)
    return result


# -- exact linear programming -------------------------------------------------

@dataclass
class LpProblem:
    """Maximize ``objective @ x`` over ``x >= 0`` subject to ``rows``.

    Each row is ``(coefficients, relation, rhs)`` with relation one of
    ``"<="``, ``"="`` or ``">="``.
    """

    num_vars: int
    rows: list
    objective: Sequence

    def __post_init__(self):
        self.objective = [Fraction(c) for c in self.objective]
        if len(self.objective) != self.num_vars:
            raise ValueError("objective length does not match variable count")
        rows = []
        for coeffs, rel, rhs in self.rows:
            if len(coeffs) != self.num_vars:
                raise ValueError("constraint row length does not match variable count")
            if rel not in ("<=", "=", ">="):
                raise ValueError(f"unknown relation {rel!r}")
            rows.append(([Fraction(c) for c in coeffs], rel, Fraction(rhs)))
        self.rows = rows

    def satisfied_by(self, x: Sequence[Fraction]) -> bool:
        if any(v < 0 for v in x):
            return False
        for coeffs, rel, rhs in self.rows:
            lhs = sum(c * v for c, v in zip(coeffs, x))
            if (rel == "<=" and lhs > rhs) or (rel == ">=" and lhs < rhs) or (rel == "=" and lhs != rhs):
                return False
        return True


@dataclass
class LpResult:
    status: str  # "optimal" | "infeasible" | "unbounded"
    value: Optional[Fraction] = None
    x: Optional[list] = None


def _pivot(tab: list, basis: list, r: int, c: int) -> None:
    row = tab[r]
    piv = row[c]
    if piv != 1:
        tab[r] = row = [v / piv for v in row]
    for i, other in enumerate(tab):
        if i != r and other[c] != 0:
            f = other[c]
            tab[i] = [a - f * b for a, b in zip(other, row)]
    basis[r] = c


def _simplex(tab: list, basis: list, cost: Sequence[Fraction], allowed: Sequence[bool]) -> str:
    """Primal simplex with Bland's rule on a tableau whose last column is the rhs."""
    ncols = len(cost)
    while True:
        entering = None
        for c in range(ncols):
            if not allowed[c] or c in basis:
                continue
            reduced = cost[c] - sum(cost[b] * tab[i][c] for i, b in enumerate(basis))
            if reduced > 0:
                entering = c
                break
        if entering is None:
            return "optimal"
        leave = None
        best = None
        for i, row in enumerate(tab):
            if row[entering] > 0:
                ratio = row[-1] / row[entering]
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave is None:
            return "unbounded"
        _pivot(tab, basis, leave, entering)


def lp_solve(lp: LpProblem) -> LpResult:
    """Two-phase exact simplex.  Returns the optimum and an optimal vertex."""
    nv = lp.num_vars
    rows = []
    for coeffs, rel, rhs in lp.rows:
        if rhs < 0:
            coeffs = [-c for c in coeffs]
            rhs = -rhs
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        rows.append((coeffs, rel, rhs))

    n_slack = sum(1 for _, rel, _ in rows if rel != "=")
    n_art = sum(1 for _, rel, _ in rows if rel != "<=")
    ncols = nv + n_slack + n_art
    tab, basis = [], []
    s = nv
    a = nv + n_slack
    artificial = [False] * ncols
    for coeffs, rel, rhs in rows:
        row = list(coeffs) + [Fraction(0)] * (n_slack + n_art) + [rhs]
        if rel == "<=":
            row[s] = Fraction(1)
            basis.append(s)
            s += 1
        else:
            if rel == ">=":
                row[s] = Fraction(-1)
                s += 1
            row[a] = Fraction(1)
            artificial[a] = True
            basis.append(a)
            a += 1
        tab.append(row)

    if n_art:
        phase1 = [Fraction(-1) if artificial[c] else Fraction(0) for c in range(ncols)]
        _simplex(tab, basis, phase1, [True] * ncols)
        if any(tab[i][-1] != 0 for i, b in enumerate(basis) if artificial[b]):
            return LpResult("infeasible")
        # drive zero-level artificials out of the basis, dropping redundant rows
        i = 0
        while i < len(tab):
            if artificial[basis[i]]:
                col = next((c for c in range(ncols) if not artificial[c] and tab[i][c] != 0), None)
                if col is None:
                    del tab[i]
                    del basis[i]
                    continue
                _pivot(tab, basis, i, col)
            i += 1

    cost = list(lp.objective) + [Fraction(0)] * (n_slack + n_art)
    status = _simplex(tab, basis, cost, [not art for art in artificial])
    if status == "unbounded":
        return LpResult("unbounded")
    x = [Fraction(0)] * nv
    for i, b in enumerate(basis):
        if b < nv:
            x[b] = tab[i][-1]
    value = sum(c * v for c, v in zip(lp.objective, x))
    return LpResult("optimal", value, x)


def dominance_lp(profile: Sequence[Fraction], profiles: Sequence[Sequence[Fraction]]) -> LpProblem:
    """Mixtures of ``profiles`` giving every agent at least ``profile``; maximize the total gain.

    The objective omits the constant ``sum(profile)``; subtract it for the slack.
    """
    n = len(profile)
    k = len(profiles)
    rows = [([Fraction(1)] * k, "=", Fraction(1))]
    for i in range(n):
        rows.append(([Fraction(q[i]) for q in profiles], ">=", Fraction(profile[i])))
    objective = [sum((Fraction(v) for v in q), Fraction(0)) for q in profiles]
    return LpProblem(k, rows, objective)


def dominance_slack(profile: Sequence[Fraction], profiles: Sequence[Sequence[Fraction]]) -> tuple:
    """``(slack, weights)`` of the best dominating mixture; slack 0 means undominated."""
    result = lp_solve(dominance_lp(profile, profiles))
    if result.status != "optimal":
        # the constraint set is feasible whenever profile lies in the hull, so
        # infeasible means no mixture reaches it at all
        return None, None
    return result.value - sum(profile), result.x


def pareto_front(profiles: Iterable[Sequence[Fraction]]) -> list[tuple]:
    uniq = sorted(set(tuple(p) for p in profiles))
    front = []
    for p in uniq:
        if not any(q != p and all(a >= b for a, b in zip(q, p)) for q in uniq):
            front.append(p)
    return front


MIXTURE_ORACLE_MAX_PROFILES = 8
MIXTURE_ORACLE_MAX_DENOMINATOR = 24


def mixture_dominance_oracle(profile: Sequence[Fraction], profiles: Iterable[Sequence[Fraction]]) -> bool:
    """Grid search for a mixture of at most three profiles that Pareto dominates ``profile``.

    Weights range over all fractions with denominator at most 24.  A ``True``
    answer is a genuine dominance; ``False`` only means none was found on the grid.
    """
    profile = tuple(Fraction(v) for v in profile)
    pool = sorted(set(tuple(Fraction(v) for v in p) for p in profiles))
    if len(pool) > MIXTURE_ORACLE_MAX_PROFILES or len(profile) > 3:
        raise CapacityError(
            f"mixture oracle handles at most {MIXTURE_ORACLE_MAX_PROFILES} profiles and 3 agents"
        )
    n = len(profile)
    # scale everything to integers; a weight vector with denominator d is an
    # integer vector summing to d, and the d-grid sits inside every multiple's grid
    scale = math.lcm(*(v.denominator for p in pool + [profile] for v in p))
    ints = [tuple(int(v * scale) for v in p) for p in pool]
    goal = tuple(int(v * scale) for v in profile)
    top = MIXTURE_ORACLE_MAX_DENOMINATOR
    dens = [d for d in range(1, top + 1) if 2 * d > top]

    for size in (1, 2, 3):
        for chosen in itertools.combinations(ints, size):
            for den in dens:
                target = [den * g for g in goal]
                for cut in itertools.combinations(range(1, den), size - 1):
                    bounds = (0,) + cut + (den,)
                    mix = [0] * n
                    for t in range(size):
                        w = bounds[t + 1] - bounds[t]
                        q = chosen[t]
                        for i in range(n):
                            mix[i] += w * q[i]
                    if all(a >= b for a, b in zip(mix, target)) and mix != target:
                        return True
    return False
