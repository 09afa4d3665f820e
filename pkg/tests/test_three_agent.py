import itertools
import random
from fractions import Fraction

import pytest

from fairchores.core import Instance
from fairchores.errors import WrongAgentCountError
from fairchores.three_agent import (
    efx_identical,
    perturb_nondegenerate,
    solve_three,
    tefx_feasible,
    terminal_assignment,
)
from fairchores.verifiers import (
    check_efx,
    check_nondegenerate,
    check_proportional,
    check_tefx,
)

F = Fraction

# Found by seeded search over random 3-agent instances; the loop exits through
# the proportional branch on this one.
PROPORTIONAL_FIXTURE = [
    [12, 16, 3, 1, 3, 0, 19],
    [11, 2, 3, 8, 7, 10, 8],
    [10, 0, 18, 6, 0, 9, 10],
]


class TestPerturbation:
    def test_formula_on_two_chores(self):
        pert, eps = perturb_nondegenerate(Instance.from_rows([[1, 2]]))
        assert eps == F(1, 16)
        assert pert.disutility[0] == (F(9, 8), F(9, 4))

    def test_zero_instance_becomes_positive(self):
        pert, eps = perturb_nondegenerate(Instance.from_rows([[0, 0]]))
        assert pert.disutility[0] == (2 * eps, 4 * eps)
        assert check_nondegenerate(pert).holds

    def test_degenerate_instance_fixed(self):
        pert, _ = perturb_nondegenerate(Instance.from_rows([[1, 1], [1, 1]]))
        assert check_nondegenerate(pert).holds

    def test_rational_entries_use_common_denominator(self):
        inst = Instance.from_rows([["1/3", "1/6"]])
        pert, eps = perturb_nondegenerate(inst)
        assert eps == F(1, 2 * 6 * 2 ** 3)
        assert pert.disutility[0][0] == F(1, 3) + 2 * eps

    def test_order_preservation(self):
        rng = random.Random(64)
        for _ in range(60):
            m = rng.randint(2, 10)
            inst = Instance.from_rows(
                [[rng.randint(0, 20) for _ in range(m)] for _ in range(3)])
            pert, _ = perturb_nondegenerate(inst)
            for _ in range(20):
                s = {c for c in range(m) if rng.random() < 0.5}
                t = {c for c in range(m) if rng.random() < 0.5}
                agent = rng.randrange(3)
                before_s = sum(inst.d(agent, c) for c in s)
                before_t = sum(inst.d(agent, c) for c in t)
                if before_s > before_t:
                    after_s = sum(pert.d(agent, c) for c in s)
                    after_t = sum(pert.d(agent, c) for c in t)
                    assert after_s > after_t


class TestGreedyIdentical:
    def test_empty(self):
        assert efx_identical([], 3) == (frozenset(), frozenset(), frozenset())

    def test_hand_traced_split(self):
        assert efx_identical([5, 3, 2, 2], 2) == (frozenset({0, 3}), frozenset({1, 2}))

    def test_unit_chores_spread(self):
        assert efx_identical([1, 1, 1], 3) == (
            frozenset({0}), frozenset({1}), frozenset({2}))

    def test_output_is_efx_for_identical_costs(self):
        from fairchores.core import ChoreCopy, SurplusAllocation

        rng = random.Random(12)
        for _ in range(80):
            n = rng.randint(2, 5)
            m = rng.randint(0, 12)
            costs = [rng.randint(0, 20) for _ in range(m)]
            bundles = efx_identical(costs, n)
            inst = Instance.from_rows([costs] * n) if m else Instance.from_rows([[]] * n)
            alloc = SurplusAllocation(
                tuple(frozenset(ChoreCopy(c, 0) for c in b) for b in bundles), m)
            assert check_efx(inst, alloc).holds


class TestFeasibility:
    def test_empty_bundle(self):
        inst = Instance.from_rows([[1, 1, 1]] * 3)
        assert tefx_feasible(inst, 0, 1, (frozenset({0, 1, 2}), frozenset(), frozenset()))

    def test_singleton_always_feasible(self):
        inst = Instance.from_rows([[9, 1, 1]] * 3)
        assert tefx_feasible(inst, 0, 0, (frozenset({0}), frozenset({1}), frozenset({2})))

    def test_lump_infeasible(self):
        inst = Instance.from_rows([[1, 1, 1]] * 3)
        partition = (frozenset({0, 1, 2}), frozenset(), frozenset())
        assert not tefx_feasible(inst, 0, 0, partition)


def brute_terminal_exists(inst, partition):
    """Oracle: any bundle permutation where 0 and 2 get feasible bundles and 1
    gets a cheapest bundle."""
    costs = [sum((inst.d(1, c) for c in partition[k]), F(0)) for k in range(3)]
    cheapest = min(costs)
    for perm in itertools.permutations(range(3)):
        b0, b1, b2 = perm
        if (tefx_feasible(inst, 0, b0, partition)
                and costs[b1] == cheapest
                and tefx_feasible(inst, 2, b2, partition)):
            return True
    return False


class TestTerminalAssignment:
    def test_everyone_flexible(self):
        inst = Instance.from_rows([[1, 1, 1]] * 3)
        partition = (frozenset({0}), frozenset({1}), frozenset({2}))
        assignment = terminal_assignment(inst, partition)
        assert assignment == {0: 0, 1: 1, 2: 2}

    def test_matches_brute_force_existence(self):
        rng = random.Random(55)
        for _ in range(150):
            m = rng.randint(1, 7)
            inst = Instance.from_rows(
                [[rng.randint(1, 9) for _ in range(m)] for _ in range(3)])
            bundles = [set(), set(), set()]
            for c in range(m):
                bundles[rng.randrange(3)].add(c)
            partition = tuple(frozenset(b) for b in bundles)
            assignment = terminal_assignment(inst, partition)
            assert (assignment is not None) == brute_terminal_exists(inst, partition)
            if assignment is not None:
                assert sorted(assignment.values()) == [0, 1, 2]
                assert tefx_feasible(inst, 0, assignment[0], partition)
                assert tefx_feasible(inst, 2, assignment[2], partition)


class TestSolveThree:
    def test_wrong_agent_count(self):
        with pytest.raises(WrongAgentCountError):
            solve_three(Instance.from_rows([[1], [1]]))

    def test_identical_costs_terminal_immediately(self):
        result = solve_three(Instance.from_rows([[3, 2, 2, 1]] * 3))
        assert result.kind == "tEFX"
        assert result.iterations == 1
        assert result.trace[0]["branch"] == "terminal"
        assert result.trace[0]["iteration"] == 0
        assert check_tefx(Instance.from_rows([[3, 2, 2, 1]] * 3), result.alloc).holds

    def test_three_chores_are_singletons(self):
        rng = random.Random(2)
        for _ in range(20):
            inst = Instance.from_rows(
                [[rng.randint(0, 9) for _ in range(3)] for _ in range(3)])
            result = solve_three(inst)
            assert result.kind == "tEFX"

    def test_empty_instance(self):
        result = solve_three(Instance.from_rows([[], [], []]))
        assert result.kind == "tEFX"
        assert all(not b for b in result.alloc.bundles)

    def test_proportional_fixture(self):
        inst = Instance.from_rows(PROPORTIONAL_FIXTURE)
        result = solve_three(inst)
        assert result.kind == "Proportional"
        assert result.trace[-1]["branch"] == "proportional"
        assert check_proportional(inst, result.alloc).holds
        for i in range(3):
            own = sum(inst.d(i, u.chore) for u in result.alloc.bundles[i])
            assert own <= inst.total(i) / 3

    def test_fuzz_certificates_and_termination(self):
        rng = random.Random(606)
        seen = set()
        for _ in range(120):
            m = rng.randint(3, 10)
            inst = Instance.from_rows(
                [[rng.randint(0, 20) for _ in range(m)] for _ in range(3)])
            result = solve_three(inst)
            seen.add(result.kind)
            assert result.kind in {"tEFX", "Proportional"}
            assert result.certificate.holds
            assert result.iterations <= m + 1
            phis = [e["phi"] for e in result.trace]
            assert all(a > b for a, b in zip(phis, phis[1:]))
            cover = {u.chore for b in result.alloc.bundles for u in b}
            assert cover == set(range(m))
        assert "tEFX" in seen
