import random
from fractions import Fraction

import pytest

from fairchores.core import (
    FractionalAllocation,
    Instance,
    MarketOutcome,
    PriceVector,
    payment_graph,
)
from fairchores.equilibrium import (
    SearchLimits,
    _forest_supports,
    approx_ceei,
    default_epsilon,
    exact_ceei,
    make_acyclic,
    verify_fisher_equilibrium,
)
from fairchores.errors import (
    InputError,
    InstanceTooLargeError,
    InvalidEquilibriumError,
    ZeroDisutilityError,
)

F = Fraction


def outcome(x_rows, prices, budgets=None, eps=0):
    x = FractionalAllocation.from_rows(x_rows)
    budgets = tuple(F(b) for b in (budgets or [1] * x.n))
    return MarketOutcome(x, PriceVector.from_values(prices), budgets, F(eps))


class TestVerifier:
    def test_single_agent_proportional_prices(self):
        inst = Instance.from_rows([[1, 3]])
        report = verify_fisher_equilibrium(inst, outcome([[1, 1]], [F(1, 4), F(3, 4)]))
        assert report.passed

    def test_diagonal_passes(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        report = verify_fisher_equilibrium(inst, outcome([[1, 0], [0, 1]], [1, 1]))
        assert report.clearing and report.incomes and report.min_pain_per_buck

    def test_skewed_prices_break_incomes(self):
        # With p=(1,2) the diagonal stays ratio-optimal for both agents but
        # agent 1 earns 2, so the income condition is the one that fails.
        inst = Instance.from_rows([[1, 2], [2, 1]])
        report = verify_fisher_equilibrium(inst, outcome([[1, 0], [0, 1]], [1, 2]))
        assert not report.passed
        assert report.min_pain_per_buck
        assert not report.incomes
        assert report.income_witness == (1, F(2))

    def test_mpb_violation_witnessed(self):
        # Anti-diagonal at unit prices hands both agents their worse ratio.
        inst = Instance.from_rows([[1, 2], [2, 1]])
        report = verify_fisher_equilibrium(inst, outcome([[0, 1], [1, 0]], [1, 1]))
        assert report.clearing and report.incomes
        assert not report.min_pain_per_buck
        assert report.mpb_witness == (0, 1)

    def test_epsilon_window(self):
        inst = Instance.from_rows([[1], [1]])
        shared = outcome([[F(11, 20)], [F(9, 20)]], [2], eps=F(1, 10))
        assert verify_fisher_equilibrium(inst, shared).passed
        tight = outcome([[F(11, 20)], [F(9, 20)]], [2], eps=F(1, 100))
        assert not verify_fisher_equilibrium(inst, tight).passed


class TestExactCeei:
    def test_one_agent_two_chores(self):
        out = exact_ceei(Instance.from_rows([[1, 3]]))
        assert tuple(out.prices) == (F(1, 4), F(3, 4))
        assert out.x.x == ((F(1), F(1)),)

    def test_two_agents_diagonal(self):
        out = exact_ceei(Instance.from_rows([[1, 2], [2, 1]]))
        assert tuple(out.prices) == (F(1), F(1))
        assert out.x.x == ((F(1), F(0)), (F(0), F(1)))

    def test_single_chore_split_three_ways(self):
        out = exact_ceei(Instance.from_rows([[1], [1], [1]]))
        assert tuple(out.prices) == (F(3),)
        assert all(row[0] == F(1, 3) for row in out.x.x)

    def test_incomes_and_price_total(self):
        rng = random.Random(31)
        for _ in range(15):
            n, m = rng.randint(1, 4), rng.randint(1, 7)
            inst = Instance.from_rows(
                [[rng.randint(1, 20) for _ in range(m)] for _ in range(n)])
            out = exact_ceei(inst)
            assert verify_fisher_equilibrium(inst, out).passed
            assert all(out.income(i) == 1 for i in range(n))
            assert out.prices.total() == n

    def test_deterministic(self):
        inst = Instance.from_rows([[3, 1, 4], [1, 5, 9]])
        assert exact_ceei(inst) == exact_ceei(inst)

    def test_limits_and_zero_rejection(self):
        big = Instance.from_rows([[1] * 8] * 2)
        with pytest.raises(InstanceTooLargeError):
            exact_ceei(big)
        assert exact_ceei(big, SearchLimits(max_chores=8)) is not None
        with pytest.raises(ZeroDisutilityError):
            exact_ceei(Instance.from_rows([[1, 0]]))
        with pytest.raises(InputError):
            exact_ceei(Instance.from_rows([[]]))


def test_support_enumeration_order():
    supports = list(_forest_supports(2, 2))
    assert supports[0] == ((0, 0), (1, 1))  # lexicographically first matching
    assert supports[1] == ((0, 1), (1, 0))
    counts = [len(s) for s in supports]
    assert counts == sorted(counts)  # edge count ascending
    assert all(len(s) < 2 + 2 for s in supports)
    # every agent and chore covered in every support
    for support in supports:
        assert {i for i, _ in support} == {0, 1}
        assert {c for _, c in support} == {0, 1}


def brute_supports(n, m):
    """Oracle enumeration: filter all edge subsets, order by (count, lex)."""
    import itertools

    import networkx as nx

    edges = [(i, c) for i in range(n) for c in range(m)]
    found = []
    for k in range(1, n + m):
        for subset in itertools.combinations(edges, k):
            if {i for i, _ in subset} != set(range(n)):
                continue
            if {c for _, c in subset} != set(range(m)):
                continue
            graph = nx.Graph((("a", i), ("c", c)) for i, c in subset)
            if nx.is_forest(graph):
                found.append(subset)
    return found


@pytest.mark.parametrize("n,m", [(1, 1), (2, 2), (2, 3), (3, 2), (3, 3)])
def test_support_enumeration_matches_brute_force(n, m):
    assert list(_forest_supports(n, m)) == brute_supports(n, m)


class TestApproxCeei:
    def test_exact_outcome_valid_at_any_epsilon(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        exact = exact_ceei(inst)
        for eps in (F(1, 100), F(1, 15), F(1, 2)):
            relaxed = MarketOutcome(exact.x, exact.prices, exact.budgets, eps)
            assert verify_fisher_equilibrium(inst, relaxed).passed

    def test_single_chore_three_agents(self):
        inst = Instance.from_rows([[1], [1], [1]])
        # The equal split at price 3 is a valid outcome at this slack.
        equal = outcome([[F(1, 3)], [F(1, 3)], [F(1, 3)]], [3], eps=F(1, 15))
        assert verify_fisher_equilibrium(inst, equal).passed
        # Whatever the solver returns, every agent must hold a positive share:
        # each income is at least 1 - eps > 0 and the only chore pays for all of it.
        out = approx_ceei(inst, F(1, 15))
        assert verify_fisher_equilibrium(inst, out).passed
        assert all(row[0] > 0 for row in out.x.x)

    def test_random_instance_self_verifies(self):
        rng = random.Random(42)
        inst = Instance.from_rows(
            [[rng.randint(1, 20) for _ in range(8)] for _ in range(4)])
        out = approx_ceei(inst, default_epsilon(4, 8))
        assert verify_fisher_equilibrium(inst, out).passed

    def test_fuzz_many_sizes(self):
        rng = random.Random(2024)
        for _ in range(40):
            n = rng.randint(2, 5)
            m = rng.randint(n, 10)
            inst = Instance.from_rows(
                [[rng.randint(1, 20) for _ in range(m)] for _ in range(n)])
            out = approx_ceei(inst, default_epsilon(n, m))
            assert verify_fisher_equilibrium(inst, out).passed

    def test_rejects_bad_epsilon_and_zero_entries(self):
        inst = Instance.from_rows([[1, 2]])
        with pytest.raises(InputError):
            approx_ceei(inst, F(0))
        with pytest.raises(InputError):
            approx_ceei(inst, F(3, 2))
        with pytest.raises(ZeroDisutilityError):
            approx_ceei(Instance.from_rows([[0, 1]]), F(1, 10))


class TestMakeAcyclic:
    def test_identity_on_forests(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        out = exact_ceei(inst)
        again = make_acyclic(inst, out)
        assert again.x == out.x and again.prices == out.prices

    def test_cancels_half_half_square(self):
        inst = Instance.from_rows([[1, 1], [1, 1]])
        out = outcome([[F(1, 2), F(1, 2)], [F(1, 2), F(1, 2)]], [1, 1])
        acyclic = make_acyclic(inst, out)
        graph = payment_graph(acyclic.x, acyclic.prices)
        assert graph.is_acyclic()
        assert verify_fisher_equilibrium(inst, acyclic).passed
        assert acyclic.prices == out.prices

    def test_edge_count_bound_and_support_shrinks(self):
        inst = Instance.from_rows([[1, 1, 1], [1, 1, 1]])
        x = [[F(2, 3), F(1, 2), F(1, 3)], [F(1, 3), F(1, 2), F(2, 3)]]
        out = outcome(x, [F(2, 3)] * 3, eps=0)
        assert verify_fisher_equilibrium(inst, out).passed
        before = set(payment_graph(out.x, out.prices).edge_dict())
        acyclic = make_acyclic(inst, out)
        after = payment_graph(acyclic.x, acyclic.prices)
        assert after.is_acyclic()
        assert set(after.edge_dict()) < before
        assert len(after.edge_dict()) <= 2 + 3 - 1

    def test_rejects_non_equilibrium(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        with pytest.raises(InvalidEquilibriumError):
            make_acyclic(inst, outcome([[0, 1], [1, 0]], [1, 1], budgets=[1, 1]))
