"""Online marginal-bidding mechanisms and the exact distribution engine.

At each round the mechanism sees the current allocation, every agent's
declared utility so far (sum of declared bids for the items they received)
and the bids for the arriving item, and returns one probability per agent.
:func:`run` expands the whole decision tree exactly.
"""

from __future__ import annotations

import re
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Optional, Sequence

from fairdiv.core import (
    Allocation,
    AllocationDistribution,
    Problem,
    SchemaError,
    popcount,
    to_fraction,
)

Shares = tuple  # tuple[Fraction, ...], one entry per agent


@dataclass(frozen=True)
class MechanismState:
    """Decision node: ``round`` is 1-based, the allocation covers the first ``round - 1`` items."""

    round: int
    allocation: Allocation
    declared: tuple

    @property
    def n(self) -> int:
        return len(self.allocation)


Rule = Callable[[MechanismState, Sequence[Fraction]], Shares]


@dataclass(frozen=True)
class Mechanism:
    """A per-round sharing rule plus what it is allowed to look at.

    ``bid_view`` is ``"none"``, ``"sign"`` or ``"order"``: how much of the
    current bids the rule reads.  ``uses_declared`` says whether it reads the
    accumulated declared utilities.  The deviation search relies on both to
    collapse equivalent misreports, so custom rules should keep the defaults.
    """

    name: str
    rule: Rule = field(compare=False, repr=False)
    wasteful: bool
    bid_view: str = "order"
    uses_declared: bool = True

    def __str__(self) -> str:
        return self.name


def _uniform(agents: Sequence[int], n: int) -> Shares:
    p = Fraction(1, len(agents))
    out = [Fraction(0)] * n
    for i in agents:
        out[i] = p
    return tuple(out)


def _likers(bids: Sequence[Fraction]) -> list[int]:
    return [i for i, b in enumerate(bids) if b > 0]


def _argmin(agents: Sequence[int], key: Sequence) -> list[int]:
    lo = min(key[i] for i in agents)
    return [i for i in agents if key[i] == lo]


def _minimum_like(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
    n = len(bids)
    like = _likers(bids)
    if not like:
        return _uniform(range(n), n)
    return _uniform(_argmin(like, state.declared), n)


def _minimum_utility(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
    n = len(bids)
    return _uniform(_argmin(range(n), state.declared), n)


def _like(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
    n = len(bids)
    return _uniform(_likers(bids) or range(n), n)


def _balanced_like(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
    n = len(bids)
    like = _likers(bids)
    if not like:
        return _uniform(range(n), n)
    counts = [popcount(b) for b in state.allocation]
    return _uniform(_argmin(like, counts), n)


def _maximum_like(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
    n = len(bids)
    like = _likers(bids)
    if not like:
        return _uniform(range(n), n)
    hi = max(bids[i] for i in like)
    return _uniform([i for i in like if bids[i] == hi], n)


def _uniform_rule(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
    return _uniform(range(len(bids)), len(bids))


def _random_dictator(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
    n = len(bids)
    if state.round == 1:
        return _uniform(range(n), n)
    # the dictator is whoever received the first item
    holder = next(i for i, b in enumerate(state.allocation) if b & 1)
    return _uniform([holder], n)


MINIMUM_LIKE = Mechanism("minimum-like", _minimum_like, wasteful=False, bid_view="sign")
MINIMUM_UTILITY = Mechanism("minimum-utility", _minimum_utility, wasteful=True, bid_view="none")
LIKE = Mechanism("like", _like, wasteful=False, bid_view="sign", uses_declared=False)
BALANCED_LIKE = Mechanism("balanced-like", _balanced_like, wasteful=False, bid_view="sign",
                          uses_declared=False)
MAXIMUM_LIKE = Mechanism("maximum-like", _maximum_like, wasteful=False, bid_view="order",
                         uses_declared=False)
UNIFORM = Mechanism("uniform", _uniform_rule, wasteful=True, bid_view="none", uses_declared=False)
RANDOM_DICTATOR = Mechanism("random-dictator", _random_dictator, wasteful=True, bid_view="none",
                            uses_declared=False)


def fixed_agent(agent: int) -> Mechanism:
    """Every item goes to ``agent`` (0-based); named with the 1-based agent number."""

    def rule(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
        if not 0 <= agent < len(bids):
            raise ValueError(f"fixed agent {agent + 1} outside 1..{len(bids)}")
        return _uniform([agent], len(bids))

    return Mechanism(f"fixed-agent({agent + 1})", rule, wasteful=True, bid_view="none",
                     uses_declared=False)


def biased_like(p: Fraction) -> Mechanism:
    """Non-wasteful: the lowest-indexed positive bidder gets ``p``, the other positive bidders share ``1 - p``.

    Pins the tie-break probability of a two-agent mechanism at every round.
    """
    p = Fraction(p)

    def rule(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
        n = len(bids)
        like = _likers(bids)
        if not like:
            return _uniform(range(n), n)
        if len(like) == 1:
            return _uniform(like, n)
        out = [Fraction(0)] * n
        out[like[0]] = p
        for i in like[1:]:
            out[i] = (1 - p) / (len(like) - 1)
        return tuple(out)

    return Mechanism(f"biased-like({p})", rule, wasteful=False, bid_view="sign",
                     uses_declared=False)


def lottery_then_minimum_like(p: Fraction) -> Mechanism:
    """Round one as :func:`biased_like`, later rounds as Minimum Like.

    On two agents with identical additive utilities this keeps every partial
    allocation EF1, so it parameterizes EF1-respecting first moves by ``p``.
    """
    first = biased_like(p).rule

    def rule(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
        if state.round == 1:
            return first(state, bids)
        return _minimum_like(state, bids)

    return Mechanism(f"lottery-then-minimum-like({Fraction(p)})", rule, wasteful=False,
                     bid_view="sign")


def index_order_like() -> Mechanism:
    """Lowest-indexed positive bidder takes the item.  A deliberately unfair control."""

    def rule(state: MechanismState, bids: Sequence[Fraction]) -> Shares:
        n = len(bids)
        like = _likers(bids)
        return _uniform([like[0]] if like else range(n), n)

    return Mechanism("index-order-like", rule, wasteful=False, bid_view="sign",
                     uses_declared=False)


BUILTIN_NAMES = ("minimum-like", "minimum-utility", "like", "balanced-like", "maximum-like",
                 "uniform", "fixed-agent(i)", "random-dictator")
NON_WASTEFUL = (MINIMUM_LIKE, LIKE, BALANCED_LIKE, MAXIMUM_LIKE)

_SIMPLE = {m.name: m for m in (MINIMUM_LIKE, MINIMUM_UTILITY, LIKE, BALANCED_LIKE, MAXIMUM_LIKE,
                               UNIFORM, RANDOM_DICTATOR)}


def get_mechanism(identifier: str) -> Mechanism:
    """Parse a mechanism identifier such as ``minimum-like`` or ``fixed-agent(2)``."""
    ident = identifier.strip()
    if ident in _SIMPLE:
        return _SIMPLE[ident]
    match = re.fullmatch(r"fixed-agent\((\d+)\)", ident)
    if match:
        agent = int(match.group(1))
        if agent < 1:
            raise SchemaError("fixed-agent numbers agents from 1")
        return fixed_agent(agent - 1)
    match = re.fullmatch(r"(biased-like|lottery-then-minimum-like)\(([^)]+)\)", ident)
    if match:
        p = to_fraction(match.group(2))
        if not 0 <= p <= 1:
            raise SchemaError(f"probability {p} outside [0, 1]")
        factory = biased_like if match.group(1) == "biased-like" else lottery_then_minimum_like
        return factory(p)
    if ident == "index-order-like":
        return index_order_like()
    raise SchemaError(f"unknown mechanism {identifier!r}; known: {', '.join(BUILTIN_NAMES)}")


def round_probabilities(mech: Mechanism, state: MechanismState, bids: Sequence[Fraction]) -> Shares:
    return mech.rule(state, tuple(bids))


# -- strategies --------------------------------------------------------------

@dataclass(frozen=True)
class StrategyProfile:
    """Declared bids overriding sincere play at specific decision nodes.

    Keys are ``(agent, round, allocation)`` with 0-based agents and 1-based
    rounds.  Every node not listed is played sincerely.  Since an allocation
    of the first ``j - 1`` items fixes the whole history, this is a complete
    pure strategy.
    """

    declared: Mapping = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for (agent, rnd, alloc), v in self.declared.items():
            v = to_fraction(v)
            if v < 0:
                raise SchemaError(f"declared bid {v} is negative")
            clean[(agent, rnd, tuple(alloc))] = v
        object.__setattr__(self, "declared", clean)

    def bid(self, problem: Problem, agent: int, state: MechanismState) -> Fraction:
        key = (agent, state.round, state.allocation)
        if key in self.declared:
            return self.declared[key]
        return problem.marginal(agent, state.allocation[agent], state.round - 1)

    def __bool__(self) -> bool:
        return bool(self.declared)


SINCERE = StrategyProfile()


def sincere_bids(problem: Problem, allocation: Allocation, j: int) -> list:
    """Sincere marginal bids for item index ``j`` given an allocation of the first ``j`` items."""
    return [problem.marginal(i, allocation[i], j) for i in range(problem.n)]


def with_item(allocation: Allocation, k: int, item: int) -> Allocation:
    alloc = list(allocation)
    alloc[k] |= 1 << item
    return tuple(alloc)


def expand(problem: Problem, mech: Mechanism, strategy: StrategyProfile = SINCERE,
           rounds: Optional[int] = None) -> dict:
    """Exact tree expansion keyed by ``(allocation, declared)`` after ``rounds`` items."""
    n = problem.n
    rounds = problem.m if rounds is None else rounds
    frontier = {((0,) * n, (Fraction(0),) * n): Fraction(1)}
    for j in range(rounds):
        nxt: dict = defaultdict(Fraction)
        for (alloc, declared), prob in frontier.items():
            state = MechanismState(j + 1, alloc, declared)
            bids = [strategy.bid(problem, i, state) for i in range(n)]
            shares = mech.rule(state, tuple(bids))
            for k, share in enumerate(shares):
                if not share:
                    continue
                dec = list(declared)
                dec[k] += bids[k]
                nxt[(with_item(alloc, k, j), tuple(dec))] += prob * share
        frontier = nxt
    return dict(frontier)


def run(problem: Problem, mech: Mechanism, strategy: StrategyProfile = SINCERE) -> AllocationDistribution:
    merged: dict = defaultdict(Fraction)
    for (alloc, _), prob in expand(problem, mech, strategy).items():
        merged[alloc] += prob
    return AllocationDistribution(problem.m, merged)


def expected_utilities(problem: Problem, dist: AllocationDistribution) -> list[list[Fraction]]:
    """Matrix ``E[i][k]`` of agent ``i``'s expected utility for agent ``k``'s bundle."""
    n = problem.n
    out = [[Fraction(0)] * n for _ in range(n)]
    for alloc, p in dist.items():
        for i in range(n):
            table = problem.utilities[i].table
            row = out[i]
            for k in range(n):
                row[k] += p * table[alloc[k]]
    return out


def swap_asymmetry(dist: AllocationDistribution) -> Optional[tuple]:
    """First ``(i, k, allocation)`` whose probability differs from the i/k-swapped allocation.

    Aggregated over allocations that agree on everyone else, this is exactly
    the per-allocation comparison, since the swapped allocation is unique.
    """
    n = len(next(iter(dist.support)))
    for i in range(n):
        for k in range(i + 1, n):
            for alloc, p in dist.items():
                swapped = list(alloc)
                swapped[i], swapped[k] = alloc[k], alloc[i]
                if dist.probability(tuple(swapped)) != p:
                    return (i, k, alloc)
    return None
