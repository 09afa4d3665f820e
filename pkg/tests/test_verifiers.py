import random
from fractions import Fraction

import pytest

from fairchores.core import ChoreCopy, Instance, PriceVector, SurplusAllocation, originals
from fairchores.equilibrium import exact_ceei
from fairchores.errors import InstanceTooLargeError
from fairchores.three_agent import perturb_nondegenerate
from fairchores.verifiers import (
    VerifyLimits,
    check_ef1,
    check_efx,
    check_fisher_integral,
    check_fpo,
    check_fpo_outcome,
    check_nondegenerate,
    check_pef1,
    check_po_brute,
    check_proportional,
    check_tefx,
    implication_suite,
)

F = Fraction


def alloc_of(m, *bundles):
    return SurplusAllocation(tuple(frozenset(originals(b)) for b in bundles), m)


def random_partition(rng, n, m):
    bundles = [set() for _ in range(n)]
    for c in range(m):
        bundles[rng.randrange(n)].add(c)
    return alloc_of(m, *bundles)


class TestEnvyChecks:
    def test_ef1_single_agent(self):
        inst = Instance.from_rows([[5, 7]])
        assert check_ef1(inst, alloc_of(2, {0, 1})).holds

    def test_ef1_removal_rescues(self):
        inst = Instance.from_rows([[3, 1], [1, 3]])
        assert check_ef1(inst, alloc_of(2, {0}, {1})).holds

    def test_ef1_everything_on_one_agent(self):
        inst = Instance.from_rows([[1, 1, 1], [1, 1, 1]])
        certificate = check_ef1(inst, alloc_of(3, {0, 1, 2}, set()))
        assert not certificate.holds
        w = certificate.witness
        assert (w["agent"], w["envied"]) == (0, 1)
        # the witness numbers reproduce the violated inequality
        assert F(w["best_removal"]) > F(w["other"])

    def test_tefx_examples(self):
        singles = Instance.from_rows([[1, 2, 3]] * 3)
        assert check_tefx(singles, alloc_of(3, {0}, {1}, {2})).holds
        ones = Instance.from_rows([[1, 1, 1]] * 3)
        assert not check_tefx(ones, alloc_of(3, {0, 1, 2}, set(), set())).holds

    def test_efx_implies_tefx_spot(self):
        rng = random.Random(3)
        for _ in range(50):
            n, m = rng.randint(2, 4), rng.randint(2, 6)
            inst = Instance.from_rows(
                [[rng.randint(0, 9) for _ in range(m)] for _ in range(n)])
            alloc = random_partition(rng, n, m)
            if check_efx(inst, alloc).holds:
                assert check_tefx(inst, alloc).holds

    def test_proportional(self):
        even = Instance.from_rows([[1, 1], [1, 1]])
        assert check_proportional(even, alloc_of(2, {0}, {1})).holds
        lump = check_proportional(even, alloc_of(2, {0, 1}, set()))
        assert not lump.holds and lump.witness["agent"] == 0

    def test_pef1(self):
        p = PriceVector.from_values([1, 1])
        empty = SurplusAllocation((frozenset(), frozenset()), 0)
        assert check_pef1(PriceVector(()), empty).holds
        assert not check_pef1(p, alloc_of(2, {0, 1}, set())).holds
        assert check_pef1(p, alloc_of(2, {0}, {1})).holds


class TestParetoChecks:
    def test_po_single_agent(self):
        inst = Instance.from_rows([[2, 3]])
        assert check_po_brute(inst, alloc_of(2, {0, 1})).holds

    def test_po_antidiagonal_dominated(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        certificate = check_po_brute(inst, alloc_of(2, {1}, {0}))
        assert not certificate.holds
        dominating = certificate.witness["dominating"]
        assert dominating[0] == [{"chore": 0, "copy": 0}]
        assert dominating[1] == [{"chore": 1, "copy": 0}]

    def test_po_diagonal_optimal(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        assert check_po_brute(inst, alloc_of(2, {0}, {1})).holds

    def test_po_limit(self):
        inst = Instance.from_rows([[1] * 10] * 4)
        with pytest.raises(InstanceTooLargeError):
            check_po_brute(inst, alloc_of(10, set(range(10)), set(), set(), set()),
                           VerifyLimits(max_po_candidates=1000))

    def test_fpo_detects_domination(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        certificate = check_fpo(inst, alloc_of(2, {1}, {0}))
        assert not certificate.holds
        assert certificate.witness["improving_agent"] == 0

    def test_fpo_single_agent(self):
        inst = Instance.from_rows([[4, 5, 6]])
        assert check_fpo(inst, alloc_of(3, {0, 1, 2})).holds

    def test_equilibria_are_fpo(self):
        # Exact equal-income equilibria must pass the fractional check.
        rng = random.Random(17)
        for _ in range(10):
            n, m = rng.randint(1, 3), rng.randint(1, 5)
            inst = Instance.from_rows(
                [[rng.randint(1, 12) for _ in range(m)] for _ in range(n)])
            out = exact_ceei(inst)
            assert check_fpo_outcome(inst, out).holds

    def test_fpo_agrees_with_brute_force(self):
        rng = random.Random(23)
        agreements = 0
        for _ in range(40):
            n, m = rng.randint(2, 3), rng.randint(2, 5)
            inst = Instance.from_rows(
                [[rng.randint(1, 9) for _ in range(m)] for _ in range(n)])
            alloc = random_partition(rng, n, m)
            fpo = check_fpo(inst, alloc)
            po = check_po_brute(inst, alloc)
            if fpo.holds:
                assert po.holds  # fractional optimality is the stronger notion
                agreements += 1
        assert agreements > 0

    def test_fpo_witness_revalidates(self):
        inst = Instance.from_rows([[1, 3], [3, 1]])
        certificate = check_fpo(inst, alloc_of(2, {1}, {0}))
        assert not certificate.holds
        w = certificate.witness
        items = [ChoreCopy(e["chore"], e["copy"]) for e in w["items"]]
        y = [[F(v) for v in row] for row in w["dominating"]]
        # clears every item and strictly improves the named agent
        for t in range(len(items)):
            assert sum(y[i][t] for i in range(inst.n)) == 1
        j = w["improving_agent"]
        improved = sum(y[j][t] * inst.d(j, items[t].chore) for t in range(len(items)))
        assert improved == F(w["objective"]) < F(w["current"])


class TestNonDegenerate:
    def test_binary_weights(self):
        assert check_nondegenerate(Instance.from_rows([[1, 2, 4]])).holds

    def test_tied_pair(self):
        certificate = check_nondegenerate(Instance.from_rows([[1, 1]]))
        assert not certificate.holds
        w = certificate.witness
        assert w["subset_a"] != w["subset_b"]

    def test_witness_revalidates(self):
        inst = Instance.from_rows([[2, 3, 5]])
        certificate = check_nondegenerate(inst)
        assert not certificate.holds
        w = certificate.witness
        sum_a = sum(inst.d(w["agent"], c) for c in w["subset_a"])
        sum_b = sum(inst.d(w["agent"], c) for c in w["subset_b"])
        assert sum_a == sum_b == F(w["sum"])

    def test_perturbed_instances_pass(self):
        rng = random.Random(9)
        for _ in range(10):
            n, m = rng.randint(1, 3), rng.randint(1, 8)
            inst = Instance.from_rows(
                [[rng.randint(0, 6) for _ in range(m)] for _ in range(n)])
            pert, _ = perturb_nondegenerate(inst)
            assert check_nondegenerate(pert).holds

    def test_limit(self):
        wide = Instance.from_rows([[1] * 13])
        with pytest.raises(InstanceTooLargeError):
            check_nondegenerate(wide)


class TestFisherIntegral:
    def test_best_ratio_bundles_pass(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        p = PriceVector.from_values([1, 1])
        assert check_fisher_integral(inst, alloc_of(2, {0}, {1}), p).holds
        bad = check_fisher_integral(inst, alloc_of(2, {1}, {0}), p)
        assert not bad.holds and bad.witness["agent"] == 0


class TestImplicationSuite:
    def test_equilibrium_round_trip(self):
        inst = Instance.from_rows([[1, 2], [2, 1]])
        p = PriceVector.from_values([1, 1])
        report = implication_suite(inst, alloc_of(2, {0}, {1}), p)
        assert report.passed
        names = [name for name, _, _ in report.results]
        assert "pEF1+FisherEq=>EF1" in names and "fPO=>PO" in names

    def test_vacuous_on_arbitrary_allocations(self):
        rng = random.Random(41)
        for _ in range(30):
            n, m = rng.randint(2, 3), rng.randint(2, 5)
            inst = Instance.from_rows(
                [[rng.randint(1, 9) for _ in range(m)] for _ in range(n)])
            alloc = random_partition(rng, n, m)
            prices = PriceVector.from_values([rng.randint(1, 5) for _ in range(m)])
            assert implication_suite(inst, alloc, prices).passed
