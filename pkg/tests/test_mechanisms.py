from collections import defaultdict
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fairdiv.core import DomainFlags, SchemaError, bundle, is_partition
from fairdiv.corpus import generate_random, load_fixture
from fairdiv.mechanisms import (
    MINIMUM_LIKE,
    MINIMUM_UTILITY,
    NON_WASTEFUL,
    RANDOM_DICTATOR,
    UNIFORM,
    MechanismState,
    StrategyProfile,
    biased_like,
    expand,
    expected_utilities,
    fixed_agent,
    get_mechanism,
    index_order_like,
    lottery_then_minimum_like,
    round_probabilities,
    run,
    swap_asymmetry,
)

HALF = Fraction(1, 2)
ALL_RULES = [get_mechanism(name) for name in (
    "minimum-like", "minimum-utility", "like", "balanced-like", "maximum-like", "uniform",
    "random-dictator", "fixed-agent(1)", "biased-like(1/3)", "lottery-then-minimum-like(1/2)",
    "index-order-like",
)]
NON_WASTEFUL_RULES = [m for m in ALL_RULES if not m.wasteful]


def state(j, alloc, declared):
    return MechanismState(j, tuple(alloc), tuple(Fraction(d) for d in declared))


def minimum_like_by_hand(values, m):
    """Plain recursive Minimum Like for identical additive values, two agents."""
    out = defaultdict(Fraction)

    def go(j, bundles, declared, prob):
        if j == m:
            out[tuple(bundles)] += prob
            return
        lowest = min(declared)
        winners = [i for i in (0, 1) if declared[i] == lowest]
        for i in winners:
            nb = list(bundles)
            nb[i] |= 1 << j
            nd = list(declared)
            nd[i] += values[j]
            go(j + 1, nb, nd, prob / len(winners))

    go(0, [0, 0], [0, 0], Fraction(1))
    return dict(out)


# -- single rounds -----------------------------------------------------------------

def test_minimum_like_single_positive_bidder():
    assert round_probabilities(MINIMUM_LIKE, state(1, (0, 0), (0, 0)), (0, 1)) == (0, 1)


def test_minimum_like_without_positive_bids_is_uniform():
    assert round_probabilities(MINIMUM_LIKE, state(1, (0, 0), (0, 0)), (0, 0)) == (HALF, HALF)


def test_minimum_like_prefers_lower_declared_utility():
    s = state(3, (0b01, 0b10), (1, 2))
    assert round_probabilities(MINIMUM_LIKE, s, (5, 5)) == (1, 0)


def test_minimum_utility_ignores_bids():
    s = state(3, (0b01, 0b10), (1, 3))
    for bids in [(0, 0), (0, 7), (2, 1)]:
        assert round_probabilities(MINIMUM_UTILITY, s, bids) == (1, 0)


def test_get_mechanism_parses_parameters():
    assert get_mechanism("fixed-agent(2)").name == "fixed-agent(2)"
    assert get_mechanism("biased-like(1/2)") == biased_like(HALF)
    with pytest.raises(SchemaError):
        get_mechanism("biased-like(3/2)")
    with pytest.raises(SchemaError):
        get_mechanism("best-mechanism")


def test_random_dictator_follows_first_winner():
    s = state(2, (0, 0b1), (0, 1))
    assert round_probabilities(RANDOM_DICTATOR, s, (9, 0)) == (0, 1)


@given(
    st.integers(1, 3).flatmap(lambda n: st.tuples(
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
        st.lists(st.integers(0, 3), min_size=n, max_size=n),
    )),
    st.sampled_from(ALL_RULES),
)
def test_round_probabilities_form_a_distribution(case, mech):
    declared, bids = case
    n = len(bids)
    # hand the first item to agent 1 so rules that look at history have one
    alloc = (1,) + (0,) * (n - 1)
    probs = round_probabilities(mech, state(2, alloc, declared), [Fraction(b) for b in bids])
    assert len(probs) == n
    assert all(p >= 0 for p in probs)
    assert sum(probs) == 1
    if not mech.wasteful and any(bids):
        assert all(p == 0 for p, b in zip(probs, bids) if b == 0)


# -- full runs -------------------------------------------------------------------------

def test_complementary_items_both_go_to_the_only_bidder():
    p = load_fixture("T2").problem
    dist = run(p, MINIMUM_LIKE)
    assert dict(dist.items()) == {(0, bundle(0, 1)): 1}


def test_three_item_run_matches_hand_expansion():
    p = load_fixture("T10").problem
    expected = minimum_like_by_hand([1, 2, 3], 3)
    assert run(p, MINIMUM_LIKE).support == expected
    # the loser of o1 takes o2, then o1's holder has the lower declared utility
    assert expected == {(bundle(0, 2), bundle(1)): HALF, (bundle(1), bundle(0, 2)): HALF}


@pytest.mark.parametrize("mech", ALL_RULES, ids=lambda m: m.name)
def test_single_agent_receives_everything(mech):
    p = generate_random(DomainFlags(), 1, 3, 7)
    assert dict(run(p, mech).items()) == {(0b111,): 1}


def test_expected_utilities_of_point_mass():
    p = load_fixture("T2").problem
    eu = expected_utilities(p, run(p, MINIMUM_LIKE))
    assert eu == [[0, 1], [0, 2]]


def test_first_item_lottery_costs_agent_one_half_a_unit():
    p = load_fixture("T1").problem
    eu = expected_utilities(p, run(p, MINIMUM_LIKE))
    assert eu[0][0] == Fraction(3, 2) == 2 - HALF


def test_fixed_agent_point_mass():
    p = load_fixture("T10").problem
    assert dict(run(p, fixed_agent(1)).items()) == {(0, 0b111): 1}


def test_strategy_overrides_only_named_nodes():
    p = load_fixture("T1").problem
    dev = StrategyProfile({(0, 1, (0, 0)): Fraction(0)})
    eu = expected_utilities(p, run(p, MINIMUM_LIKE, dev))
    assert eu[0][0] == 2


problems = st.builds(
    generate_random,
    st.sampled_from([DomainFlags(), DomainFlags(identical=True), DomainFlags(additive=True),
                     DomainFlags(zero_one_marginals=True)]),
    st.integers(1, 3), st.integers(1, 4), st.integers(0, 10_000),
)


@given(problems, st.sampled_from(ALL_RULES))
def test_runs_partition_items_and_normalize(problem, mech):
    dist = run(problem, mech)
    assert sum(p for _, p in dist.items()) == 1
    assert all(is_partition(alloc, problem.m) for alloc in dist.support)


@given(problems, st.sampled_from(ALL_RULES))
def test_declared_utility_telescopes_under_sincere_play(problem, mech):
    for (alloc, declared), _ in expand(problem, mech).items():
        assert list(declared) == [problem.value(i, alloc[i]) for i in range(problem.n)]


def aggregate_swap_gap(dist, n):
    """Independent symmetry check: compare each allocation with its i/k swap."""
    for alloc, prob in dist.items():
        for i in range(n):
            for k in range(i + 1, n):
                swapped = list(alloc)
                swapped[i], swapped[k] = swapped[k], swapped[i]
                if dist.probability(tuple(swapped)) != prob:
                    return (i, k, alloc)
    return None


@given(st.integers(2, 3), st.integers(1, 4), st.integers(0, 10_000), st.booleans())
def test_identical_utilities_give_swap_symmetric_outcomes(n, m, seed, nonzero):
    p = generate_random(DomainFlags(identical=True, nonzero_marginals=nonzero), n, m, seed)
    dist = run(p, MINIMUM_LIKE)
    assert swap_asymmetry(dist) is None
    assert aggregate_swap_gap(dist, n) is None
    eu = expected_utilities(p, dist)
    assert all(eu[i][i] == eu[i][k] for i in range(n) for k in range(n))


def test_swap_asymmetry_detects_a_biased_rule():
    p = load_fixture("T8").problem
    dist = run(p, lottery_then_minimum_like(Fraction(1)))
    assert swap_asymmetry(dist) is not None


def test_index_order_control_is_not_symmetric():
    p = load_fixture("T10").problem
    assert dict(run(p, index_order_like()).items()) == {(0b111, 0): 1}


def test_uniform_lottery_spreads_evenly():
    p = load_fixture("T8").problem
    dist = run(p, UNIFORM)
    assert len(dist) == 4 and set(pr for _, pr in dist.items()) == {Fraction(1, 4)}


def test_non_wasteful_builtins_are_flagged():
    assert {m.name for m in NON_WASTEFUL} == {"minimum-like", "like", "balanced-like", "maximum-like"}
    assert all(not m.wasteful for m in NON_WASTEFUL_RULES)
