import itertools
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from fairdiv.axioms import deterministic_profiles
from fairdiv.core import CapacityError, bundle, popcount
from fairdiv.corpus import generate_random, load_fixture
from fairdiv.oracles import (
    LpProblem,
    dominance_lp,
    dominance_slack,
    ef1_continuations,
    enumerate_allocations,
    lp_solve,
    mixture_dominance_oracle,
    offline_exists,
    pareto_front,
)
from tests.conftest import DOMAINS

F = Fraction


def solve_linear(a, b):
    """Gauss-Jordan over Fractions; None when singular."""
    n = len(a)
    m = [list(row) + [rhs] for row, rhs in zip(a, b)]
    for c in range(n):
        piv = next((r for r in range(c, n) if m[r][c] != 0), None)
        if piv is None:
            return None
        m[c], m[piv] = m[piv], m[c]
        for r in range(n):
            if r != c and m[r][c] != 0:
                f = m[r][c] / m[c][c]
                m[r] = [x - f * y for x, y in zip(m[r], m[c])]
    return [m[r][n] / m[r][r] for r in range(n)]


def vertex_optimum(lp):
    """Best objective over all basic feasible points: choose num_vars tight constraints."""
    rows = [(coeffs, rhs) for coeffs, _, rhs in lp.rows]
    rows += [([F(int(i == k)) for i in range(lp.num_vars)], F(0)) for k in range(lp.num_vars)]
    best = None
    for chosen in itertools.combinations(rows, lp.num_vars):
        x = solve_linear([c for c, _ in chosen], [r for _, r in chosen])
        if x is not None and lp.satisfied_by(x):
            val = sum(c * v for c, v in zip(lp.objective, x))
            best = val if best is None else max(best, val)
    return best


# -- enumeration ---------------------------------------------------------------------

@pytest.mark.parametrize("n,j,count", [(2, 2, 4), (2, 4, 16), (3, 2, 9)])
def test_enumeration_counts(n, j, count):
    allocs = enumerate_allocations(n, j)
    assert len(allocs) == count == len(set(allocs))


def test_enumeration_respects_cap():
    with pytest.raises(CapacityError):
        enumerate_allocations(3, 8, cap=100)


# -- offline existence ---------------------------------------------------------------

def test_offline_ef1_gives_two_items_each():
    alloc = offline_exists(load_fixture("T4").problem, "EF1")
    assert [popcount(b) for b in alloc] == [2, 2]


def test_offline_ef_gives_one_item_each():
    alloc = offline_exists(load_fixture("T2").problem, "EF")
    assert [popcount(b) for b in alloc] == [1, 1]


def test_offline_efx_pairs_the_small_items():
    alloc = offline_exists(load_fixture("T10").problem, "EFX")
    assert alloc in {(bundle(0, 1), bundle(2)), (bundle(2), bundle(0, 1))}


def test_offline_unknown_property():
    with pytest.raises(ValueError):
        offline_exists(load_fixture("T2").problem, "MMS")


@given(st.integers(0, 10_000), st.sampled_from(DOMAINS), st.integers(2, 3), st.integers(1, 4))
def test_offline_existence_chain(seed, domain, n, m):
    p = generate_random(domain, n, m, seed)
    ef = offline_exists(p, "EF")
    efx = offline_exists(p, "EFX")
    ef1 = offline_exists(p, "EF1")
    if ef is not None:
        assert efx is not None
    if efx is not None:
        assert ef1 is not None


def test_continuations_from_forced_first_move():
    p = load_fixture("T6a").problem
    search = ef1_continuations(p, (bundle(0), 0), 1)
    assert search.completions == []
    assert search.dead_ends == [(bundle(0), bundle(1))]


def test_continuations_reject_bad_start():
    with pytest.raises(ValueError):
        ef1_continuations(load_fixture("T6a").problem, (0b11, 0b1), 2)


# -- exact LP ------------------------------------------------------------------------

def test_lp_single_variable():
    res = lp_solve(LpProblem(1, [([1], "<=", 1)], [1]))
    assert res.status == "optimal" and res.value == 1 and res.x == [1]


def test_lp_equality_and_surplus_rows():
    lp = LpProblem(2, [([1, 1], "=", 3), ([1, -1], ">=", 1), ([0, 1], ">=", F(1, 2))], [1, 2])
    res = lp_solve(lp)
    assert res.status == "optimal"
    assert res.value == F(4)
    assert lp.satisfied_by(res.x)


def test_lp_redundant_equalities():
    lp = LpProblem(2, [([1, 1], "=", 1), ([2, 2], "=", 2)], [3, 1])
    res = lp_solve(lp)
    assert res.value == 3 and res.x == [1, 0]


def test_lp_infeasible():
    assert lp_solve(LpProblem(1, [([1], ">=", 2), ([1], "<=", 1)], [1])).status == "infeasible"


def test_lp_unbounded():
    assert lp_solve(LpProblem(2, [([1, -1], "<=", 1)], [1, 0])).status == "unbounded"


def test_lp_negative_rhs():
    res = lp_solve(LpProblem(1, [([-1], "<=", -2)], [-1]))
    assert res.status == "optimal" and res.x == [2]


small_lps = st.integers(1, 3).flatmap(lambda k: st.builds(
    lambda rows, obj: LpProblem(k, rows + [([1] * k, "<=", 5)], obj),
    st.lists(st.tuples(
        st.lists(st.integers(-3, 3), min_size=k, max_size=k),
        st.sampled_from(["<=", ">=", "="]),
        st.integers(-4, 4),
    ), max_size=3),
    st.lists(st.integers(-3, 3), min_size=k, max_size=k),
))


@given(small_lps)
def test_lp_matches_vertex_enumeration(lp):
    # the budget row keeps the region bounded, so only optimal/infeasible occur
    res = lp_solve(lp)
    best = vertex_optimum(lp)
    if best is None:
        assert res.status == "infeasible"
    else:
        assert res.status == "optimal"
        assert lp.satisfied_by(res.x)
        assert res.value == best


def test_dominance_lp_finds_slack_for_the_two_two_profile():
    profiles = list(deterministic_profiles(load_fixture("T5").problem))
    assert (3, 2) in profiles
    slack, weights = dominance_slack((2, 2), profiles)
    assert slack > 0 and sum(weights) == 1


def test_dominance_lp_zero_at_unique_sum_maximizer():
    profiles = [(F(3), F(1)), (F(1), F(1)), (F(0), F(2))]
    slack, _ = dominance_slack((3, 1), profiles)
    assert slack == 0


def test_dominance_lp_residuals():
    profiles = list(deterministic_profiles(load_fixture("T9").problem))
    lp = dominance_lp((3, 3), profiles)
    res = lp_solve(lp)
    assert lp.satisfied_by(res.x)


# -- mixture oracle ----------------------------------------------------------------------

def test_mixture_oracle_two_two_case():
    front = pareto_front(deterministic_profiles(load_fixture("T5").problem))
    assert mixture_dominance_oracle((2, 2), front)


def test_mixture_oracle_unique_maximizer():
    assert not mixture_dominance_oracle((3, 1), [(3, 1), (1, 1), (0, 2)])


def test_mixture_oracle_trivial_dominance():
    assert mixture_dominance_oracle((0, 0), [(1, 0)])


def test_mixture_oracle_capacity():
    with pytest.raises(CapacityError):
        mixture_dominance_oracle((0, 0), [(i, 0) for i in range(9)])


def test_mixture_oracle_needs_a_real_mixture():
    # neither (4,0) nor (0,4) dominates (1,1) but their average does
    assert mixture_dominance_oracle((1, 1), [(4, 0), (0, 4)])
    assert not mixture_dominance_oracle((1, 1), [(4, 0)])


@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=1, max_size=6),
       st.tuples(st.integers(0, 4), st.integers(0, 4)))
def test_oracle_true_implies_positive_lp_slack(profiles, target):
    if mixture_dominance_oracle(target, profiles):
        slack, _ = dominance_slack(target, profiles)
        assert slack is not None and slack > 0
