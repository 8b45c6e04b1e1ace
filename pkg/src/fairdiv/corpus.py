"""Named instances with their expected verdicts, plus a seeded problem generator.

Fixture ids: ``E1`` is the two-item marginal example, ``T1``..``T10`` the
instances behind each impossibility or possibility result (``T6a``/``T6b``
are the two adversarial additive tables).
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from pathlib import Path
from typing import Optional, Union

from fairdiv.axioms import check
from fairdiv.core import DomainFlags, Problem, UtilityFunction, bundle, popcount
from fairdiv.mechanisms import (
    MINIMUM_UTILITY,
    NON_WASTEFUL,
    RANDOM_DICTATOR,
    UNIFORM,
    Mechanism,
    biased_like,
    fixed_agent,
    get_mechanism,
)
from fairdiv.oracles import ef1_continuations, offline_exists


@dataclass(frozen=True)
class Expectation:
    """``subject`` is a mechanism id, ``any-non-wasteful``, ``any`` or ``offline``.

    ``axiom`` is an axiom name for mechanisms, a property (``EF``, ``EF1``,
    ``EFX``, ``PEP``) for ``offline``, or ``ef1-continuation`` with ``start``
    giving the forced owner (0-based) of the first item.
    """

    subject: str
    axiom: str
    expected: bool
    note: str
    start: Optional[int] = None


@dataclass(frozen=True)
class Fixture:
    id: str
    problem: Problem
    expectations: tuple = field(default_factory=tuple)
    description: str = ""


SYNTHETIC_P = (Fraction(0), Fraction(1, 2), Fraction(1))


def non_wasteful_family() -> list[Mechanism]:
    """Built-in non-wasteful mechanisms plus tie-break-pinned variants for p in {0, 1/2, 1}."""
    return list(NON_WASTEFUL) + [biased_like(p) for p in SYNTHETIC_P]


def all_mechanisms(n: int) -> list[Mechanism]:
    return non_wasteful_family() + [MINIMUM_UTILITY, UNIFORM, RANDOM_DICTATOR] + [fixed_agent(i) for i in range(n)]


def _items(m: int) -> list[str]:
    return [f"o{j + 1}" for j in range(m)]


def _identical(m: int, value, n: int = 2) -> Problem:
    u = UtilityFunction.from_function(m, value)
    return Problem(n, _items(m), [u] * n)


def _e1() -> Problem:
    u1 = UtilityFunction.from_mapping(2, {bundle(0): 2, bundle(1): 4, bundle(0, 1): 6})
    u2 = UtilityFunction.from_mapping(2, {bundle(0): 5, bundle(1): 2, bundle(0, 1): 5})
    return Problem(2, _items(2), [u1, u2])


def _t1() -> Problem:
    def value(b):
        size = popcount(b)
        if size == 2:
            return 2 if b == bundle(1, 2) else 1
        return {0: 0, 1: 1, 3: 2}[size]

    return _identical(3, value)


def _t2() -> Problem:
    u1 = UtilityFunction.from_mapping(2, {bundle(0): 0, bundle(1): 0, bundle(0, 1): 1})
    u2 = UtilityFunction.from_mapping(2, {bundle(0): 1, bundle(1): 1, bundle(0, 1): 2})
    return Problem(2, _items(2), [u1, u2])


def _t4() -> Problem:
    def value(b):
        size = popcount(b)
        if size == 2:
            return 1 if b & 1 else 2
        if size == 3:
            return 3 if b == bundle(1, 2, 3) else 2
        return {0: 0, 1: 1, 4: 3}[size]

    return _identical(4, value)


def _t5() -> Problem:
    def value(b):
        size = popcount(b)
        if size == 1:
            return 2 if b in (bundle(2), bundle(3)) else 1
        if size == 2:
            return 1 if b == bundle(0, 1) else 2
        if size == 3:
            return 3 if b == bundle(0, 1, 3) else 2
        return {0: 0, 4: 3}[size]

    return _identical(4, value)


def _additive(*rows) -> Problem:
    return Problem(len(rows), _items(len(rows[0])), [UtilityFunction.additive(r) for r in rows])


def _t9() -> Problem:
    table = {0: 0, bundle(0): 1, bundle(1): 2, bundle(2): 3,
             bundle(0, 1): 4, bundle(0, 2): 4, bundle(1, 2): 4, bundle(0, 1, 2): 5}
    return _identical(3, table.__getitem__)


_NW = "any-non-wasteful"


def _build() -> dict:
    fixtures = [
        Fixture("E1", _e1(), (
            Expectation("minimum-like", "osp", True, "current-round misreports never pay off"),
            Expectation("minimum-utility", "osp", True, "bids are ignored within a round"),
            Expectation("uniform", "sp", True, "the uniform lottery ignores bids"),
        ), "two items, marginals depend on what was received first"),
        Fixture("T1", _t1(), (
            Expectation(_NW, "sp", False, "zero-bidding the first item secures the valuable pair"),
            Expectation("minimum-like", "osp", True, "one-round misreports never pay off"),
            Expectation("minimum-like", "efa", True, "identical utilities give swap-symmetric lotteries"),
            Expectation("uniform", "sp", True, "the uniform lottery ignores bids"),
            Expectation("uniform", "gsp", True, "no coalition can steer the uniform lottery"),
        ), "identical monotone utilities with 0/1 marginals"),
        Fixture("T2", _t2(), (
            Expectation(_NW, "efp", False, "agent 2 is the only positive bidder twice"),
            Expectation(_NW, "efa", False, "agent 1 values the pair agent 2 always receives"),
            Expectation("offline", "EF", True, "one item each is envy-free"),
            Expectation("minimum-like", "osp", True, "one-round misreports never pay off"),
        ), "complementary items for agent 1, 0/1 marginals"),
        Fixture("T4", _t4(), (
            Expectation(_NW, "ef1", False, "the first item's loser takes the other three"),
            Expectation("offline", "EF1", True, "two items each is EF1"),
            Expectation("minimum-like", "efa", True, "identical utilities give swap-symmetric lotteries"),
        ), "identical monotone utilities with 0/1 marginals, four items"),
        Fixture("T5", _t5(), (
            Expectation(_NW, "pep", False, "every outcome gives (2,2) but (3,2) is feasible"),
            Expectation(_NW, "pea", False, "the (3,2) allocation dominates in expectation"),
            Expectation("minimum-utility", "ef1", True, "minimum utility stays EF1 with identical utilities"),
        ), "identical monotone utilities, four items"),
        Fixture("T6a", _additive([50, 100, 100], [100, 50, 100]), (
            Expectation("offline", "ef1-continuation", False,
                        "no EF1 path once agent 1 holds the first item", start=0),
            Expectation("minimum-like", "ef1", False, "minimum like hands out the first item by lottery"),
            Expectation("like", "sp", True, "with additive utilities the like lottery rewards no misreport"),
        ), "positive additive utilities, first branch"),
        Fixture("T6b", _additive([50, 40, 410], [100, 200, 200]), (
            Expectation("offline", "ef1-continuation", False,
                        "no EF1 path once agent 2 holds the first item", start=1),
        ), "positive additive utilities, second branch"),
        Fixture("T8", _additive([1, 2], [1, 2]), tuple(
            Expectation(f"lottery-then-minimum-like({p})", "sp", False, "zero-bidding the first item pays off")
            for p in SYNTHETIC_P
        ) + (
            Expectation("minimum-like", "sp", False, "zero-bidding the first item pays off"),
            Expectation("minimum-utility", "sp", False, "under-declaring the first item pays off"),
            Expectation("minimum-like", "ef1", True, "identical additive utilities"),
            Expectation("minimum-like", "efa", True, "identical utilities give swap-symmetric lotteries"),
            Expectation("minimum-like", "pep", True, "every allocation has the same total"),
            Expectation("minimum-like", "pea", True, "every allocation has the same total"),
        ), "identical additive utilities, two items"),
        Fixture("T9", _t9(), (
            Expectation("minimum-like", "ef1", True, "identical utilities with non-zero marginals"),
            Expectation("minimum-like", "efa", True, "identical utilities give swap-symmetric lotteries"),
            Expectation("minimum-like", "pep", False, "EF1 forces a split worth less than (4,3)"),
            Expectation("minimum-like", "pea", False, "mixing (4,3) and (3,4) beats (3,3)"),
        ), "identical monotone utilities with non-zero marginals"),
        Fixture("T10", _additive([1, 2, 3], [1, 2, 3]), (
            Expectation(_NW, "efx", False, "the first two items must be split, then the third breaks EFX"),
            Expectation("any", "efx", False, "no online rule anticipates the third item"),
            Expectation("offline", "EFX", True, "pairing the two small items works offline"),
            Expectation("minimum-like", "ef1", True, "identical additive utilities"),
            Expectation("minimum-like", "efa", True, "identical utilities give swap-symmetric lotteries"),
        ), "identical additive utilities 1, 2, 3"),
    ]
    return {f.id: f for f in fixtures}


FIXTURES = _build()
FIXTURE_IDS = tuple(FIXTURES)


def load_fixture(fixture_id: str) -> Fixture:
    try:
        return FIXTURES[fixture_id]
    except KeyError:
        raise KeyError(f"unknown fixture {fixture_id!r}; known: {', '.join(FIXTURE_IDS)}") from None


def gsp_pair_instance(low: int = 1, high: int = 2) -> Problem:
    """Two agents, one item, different positive values."""
    return _additive([low], [high])


# -- running expectations -------------------------------------------------------

@dataclass
class Outcome:
    fixture: str
    subject: str
    axiom: str
    expected: bool
    actual: bool
    detail: object = None

    @property
    def ok(self) -> bool:
        return self.expected == self.actual


def evaluate(fixture: Fixture, exp: Expectation) -> list[Outcome]:
    problem = fixture.problem
    if exp.subject == "offline":
        if exp.axiom == "ef1-continuation":
            start = [0] * problem.n
            start[exp.start] = 1
            search = ef1_continuations(problem, tuple(start), 1)
            return [Outcome(fixture.id, "offline", exp.axiom, exp.expected, bool(search.completions), search)]
        found = offline_exists(problem, exp.axiom)
        return [Outcome(fixture.id, "offline", exp.axiom, exp.expected, found is not None, found)]
    if exp.subject == _NW:
        mechs = non_wasteful_family()
    elif exp.subject == "any":
        mechs = all_mechanisms(problem.n)
    else:
        mechs = [get_mechanism(exp.subject)]
    out = []
    for mech in mechs:
        verdict = check(problem, mech, exp.axiom)
        out.append(Outcome(fixture.id, mech.name, exp.axiom, exp.expected, verdict.holds, verdict))
    return out


def run_corpus() -> list[Outcome]:
    return [o for f in FIXTURES.values() for exp in f.expectations for o in evaluate(f, exp)]


# -- JSON export -----------------------------------------------------------------

def fixture_json_path(fixture_id: str):
    return resources.files("fairdiv") / "fixtures" / f"{fixture_id}.json"


def export_fixtures(directory: Union[str, Path]) -> list[Path]:
    from fairdiv.serialize import problem_to_json

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for fid, fx in FIXTURES.items():
        path = directory / f"{fid}.json"
        path.write_text(json.dumps(problem_to_json(fx.problem), indent=2) + "\n")
        paths.append(path)
    return paths


# -- random problems -------------------------------------------------------------

def _random_table(rng: random.Random, m: int, nonzero: bool, zero_one: bool) -> UtilityFunction:
    table = [Fraction(0)] * (1 << m)
    for mask in sorted(range(1, 1 << m), key=popcount):
        below = [table[mask & ~(1 << o)] for o in range(m) if mask >> o & 1]
        hi = max(below)
        if zero_one:
            # a unit step keeps every marginal in {0, 1} only if all one-smaller subsets agree
            step = 1 if nonzero else (rng.randint(0, 1) if min(below) == hi else 0)
        else:
            step = rng.randint(1 if nonzero else 0, 3)
        table[mask] = hi + step
    return UtilityFunction(m, table=table)


def _random_additive(rng: random.Random, m: int, nonzero: bool, zero_one: bool) -> UtilityFunction:
    top = 1 if zero_one else 4
    return UtilityFunction.additive([rng.randint(1 if nonzero else 0, top) for _ in range(m)])


def generate_random(domain: DomainFlags, n: int, m: int, seed: int) -> Problem:
    """Seeded random problem inside ``domain`` (flags set to True are guaranteed).

    Monotone tables are built bottom-up: each bundle takes the best value of
    its one-smaller subsets plus a random nonnegative step.
    """
    if not 1 <= n <= 3 or not 1 <= m <= 5:
        raise ValueError("generate_random supports 1 <= n <= 3 and 1 <= m <= 5")
    additive = domain.additive or domain.positive_additive
    nonzero = domain.nonzero_marginals or domain.positive_additive
    rng = random.Random(seed)
    build = _random_additive if additive else _random_table

    def draw():
        return build(rng, m, nonzero, domain.zero_one_marginals)

    if domain.identical:
        u = draw()
        utilities = [u] * n
    else:
        utilities = [draw() for _ in range(n)]
    return Problem(n, _items(m), utilities)
