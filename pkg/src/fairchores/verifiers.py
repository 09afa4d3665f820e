"""Certify or refute fairness and efficiency properties, with witnesses.

Every check returns a ``Certificate``; a failed certificate always carries a
witness that re-validates by plain arithmetic. The brute-force checks are the
desk-scale oracles the rest of the test suite leans on.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .core import (
    ZERO,
    ChoreCopy,
    Instance,
    MarketOutcome,
    PriceVector,
    SurplusAllocation,
    bundle_disutility,
    bundle_payment,
    mpb,
)
from .equilibrium import EquilibriumReport, verify_fisher_equilibrium
from .errors import InstanceTooLargeError
from .simplex import OPTIMAL, solve_lp

EF1 = "EF1"
EFX = "EFX"
TEFX = "tEFX"
PEF1 = "pEF1"
PROPORTIONAL = "Proportional"
PO = "PO"
FPO = "fPO"
FISHER_EQ = "FisherEq"
NON_DEGENERATE = "NonDegenerate"


@dataclass(frozen=True)
class Certificate:
    property: str
    holds: bool
    witness: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"property": self.property, "holds": self.holds, "witness": self.witness}


@dataclass(frozen=True)
class VerifyLimits:
    """Caps for the exhaustive verifications."""

    max_po_candidates: int = 10**6
    max_lp_variables: int = 600
    max_subset_chores: int = 12


def _fmt(value: Fraction) -> str:
    from .serialize import fmt_rat

    return str(fmt_rat(value))


def check_ef1(inst: Instance, alloc: SurplusAllocation) -> Certificate:
    """Envy-freeness up to removing one chore from the envious bundle."""
    for i in range(alloc.n):
        mine = alloc.bundles[i]
        total = bundle_disutility(inst, i, mine)
        drop = max((inst.d(i, u.chore) for u in mine), default=ZERO)
        for j in range(alloc.n):
            if i == j:
                continue
            other = bundle_disutility(inst, i, alloc.bundles[j])
            if total - drop > other:
                return Certificate(EF1, False, {
                    "agent": i, "envied": j,
                    "own": _fmt(total), "best_removal": _fmt(total - drop),
                    "other": _fmt(other)})
    return Certificate(EF1, True)


def check_efx(inst: Instance, alloc: SurplusAllocation) -> Certificate:
    """Envy-freeness up to removing any chore from the envious bundle."""
    for i in range(alloc.n):
        mine = alloc.bundles[i]
        if not mine:
            continue
        total = bundle_disutility(inst, i, mine)
        softest = min(mine, key=lambda u: (inst.d(i, u.chore), u))
        drop = inst.d(i, softest.chore)
        for j in range(alloc.n):
            if i == j:
                continue
            other = bundle_disutility(inst, i, alloc.bundles[j])
            if total - drop > other:
                return Certificate(EFX, False, {
                    "agent": i, "envied": j,
                    "chore": softest.chore, "copy": softest.copy,
                    "after_removal": _fmt(total - drop), "other": _fmt(other)})
    return Certificate(EFX, True)


def check_tefx(inst: Instance, alloc: SurplusAllocation) -> Certificate:
    """No strong envy: transferring any single chore kills the envy."""
    for i in range(alloc.n):
        mine = alloc.bundles[i]
        if not mine:
            continue
        total = bundle_disutility(inst, i, mine)
        softest = min(mine, key=lambda u: (inst.d(i, u.chore), u))
        drop = inst.d(i, softest.chore)
        for j in range(alloc.n):
            if i == j:
                continue
            other = bundle_disutility(inst, i, alloc.bundles[j])
            if total - drop > other + drop:
                return Certificate(TEFX, False, {
                    "agent": i, "envied": j,
                    "chore": softest.chore, "copy": softest.copy,
                    "after_transfer": _fmt(total - drop),
                    "other_with_chore": _fmt(other + drop)})
    return Certificate(TEFX, True)


def check_proportional(inst: Instance, alloc: SurplusAllocation) -> Certificate:
    """Every bundle costs its holder at most a 1/n share of all original chores."""
    for i in range(alloc.n):
        own = bundle_disutility(inst, i, alloc.bundles[i])
        share = inst.total(i) / alloc.n
        if own > share:
            return Certificate(PROPORTIONAL, False, {
                "agent": i, "own": _fmt(own), "share": _fmt(share)})
    return Certificate(PROPORTIONAL, True)


def check_pef1(prices: PriceVector, alloc: SurplusAllocation) -> Certificate:
    """Payment envy-freeness up to one chore."""
    for i in range(alloc.n):
        mine = alloc.bundles[i]
        if not mine:
            continue
        total = bundle_payment(prices, mine)
        drop = max(prices[u.chore] for u in mine)
        for j in range(alloc.n):
            if i == j:
                continue
            other = bundle_payment(prices, alloc.bundles[j])
            if total - drop > other:
                return Certificate(PEF1, False, {
                    "agent": i, "envied": j,
                    "own_after_removal": _fmt(total - drop), "other": _fmt(other)})
    return Certificate(PEF1, True)


def check_fisher_eq(inst: Instance, out: MarketOutcome) -> Certificate:
    """Fisher-equilibrium conditions of a fractional outcome (delegated)."""
    report: EquilibriumReport = verify_fisher_equilibrium(inst, out)
    witness = None if report.passed else report.to_dict()["witness"]
    return Certificate(FISHER_EQ, report.passed, witness)


def check_fisher_integral(inst: Instance, alloc: SurplusAllocation,
                          prices: PriceVector) -> Certificate:
    """Fisher-equilibrium conditions of an integral bundle allocation.

    With budgets read off as the bundle payments, clearing and incomes hold by
    construction; the substance is that every allocated unit is a best-ratio
    chore for its holder.
    """
    for i in range(alloc.n):
        if not alloc.bundles[i]:
            continue
        best, _ = mpb(inst, prices, i)
        for unit in sorted(alloc.bundles[i]):
            if inst.d(i, unit.chore) / prices[unit.chore] != best:
                return Certificate(FISHER_EQ, False, {
                    "condition": "min-pain-per-buck", "agent": i,
                    "chore": unit.chore, "copy": unit.copy})
    return Certificate(FISHER_EQ, True)


def check_po_brute(inst: Instance, alloc: SurplusAllocation,
                   limits: VerifyLimits = VerifyLimits()) -> Certificate:
    """Pareto optimality by exhaustive reassignment of the allocated units.

    The item multiset is fixed to what the allocation actually handed out
    (copies included); a counter-witness is an integral reassignment that is
    weakly better for everyone and strictly better for someone.
    """
    items = alloc.items()
    n = len(alloc.bundles)
    if n ** len(items) > limits.max_po_candidates:
        raise InstanceTooLargeError(
            f"{n}^{len(items)} candidate allocations exceed the brute-force cap")
    caps = [bundle_disutility(inst, i, alloc.bundles[i]) for i in range(n)]
    loads = [ZERO] * n
    assignment: list[int] = []

    def search(pos: int) -> Optional[list[int]]:
        if pos == len(items):
            if any(loads[i] < caps[i] for i in range(n)):
                return assignment[:]
            return None
        cost_row = [inst.d(i, items[pos].chore) for i in range(n)]
        for i in range(n):
            if loads[i] + cost_row[i] > caps[i]:
                continue
            loads[i] += cost_row[i]
            assignment.append(i)
            found = search(pos + 1)
            assignment.pop()
            loads[i] -= cost_row[i]
            if found is not None:
                return found
        return None

    dominating = search(0)
    if dominating is None:
        return Certificate(PO, True)
    bundles: list[list[dict]] = [[] for _ in range(n)]
    for unit, owner in zip(items, dominating):
        bundles[owner].append({"chore": unit.chore, "copy": unit.copy})
    return Certificate(PO, False, {"dominating": bundles})


def _fpo_certificate(inst: Instance, items: list[ChoreCopy], caps: list[Fraction],
                     limits: VerifyLimits) -> Certificate:
    n, k = inst.n, len(items)
    if n * k > limits.max_lp_variables:
        raise InstanceTooLargeError(f"{n * k} LP variables exceed the configured cap")
    if k == 0:
        return Certificate(FPO, True)
    # Variables y[i][t] laid out row-major; one clearing equality per item and
    # one disutility cap per agent.
    a_eq = []
    for t in range(k):
        row = [Fraction(0)] * (n * k)
        for i in range(n):
            row[i * k + t] = Fraction(1)
        a_eq.append(row)
    b_eq = [Fraction(1)] * k
    a_ub = []
    for i in range(n):
        row = [Fraction(0)] * (n * k)
        for t in range(k):
            row[i * k + t] = inst.d(i, items[t].chore)
        a_ub.append(row)
    b_ub = caps

    for j in range(n):
        cost = [Fraction(0)] * (n * k)
        for t in range(k):
            cost[j * k + t] = inst.d(j, items[t].chore)
        result = solve_lp(cost, a_eq=a_eq, b_eq=b_eq, a_ub=a_ub, b_ub=b_ub)
        assert result.status == OPTIMAL  # the allocation itself is feasible
        if result.objective < caps[j]:
            matrix = [[_fmt(result.solution[i * k + t]) for t in range(k)]
                      for i in range(n)]
            return Certificate(FPO, False, {
                "improving_agent": j,
                "objective": _fmt(result.objective),
                "current": _fmt(caps[j]),
                "items": [{"chore": u.chore, "copy": u.copy} for u in items],
                "dominating": matrix})
    return Certificate(FPO, True)


def check_fpo(inst: Instance, alloc: SurplusAllocation,
              limits: VerifyLimits = VerifyLimits()) -> Certificate:
    """Fractional Pareto optimality over the allocation's own item multiset.

    One exact linear program per agent: minimize that agent's disutility
    subject to clearing and to nobody getting worse off. The allocation is
    fractionally dominated exactly when some optimum lands strictly below the
    agent's current disutility.
    """
    items = alloc.items()
    caps = [bundle_disutility(inst, i, alloc.bundles[i]) for i in range(alloc.n)]
    return _fpo_certificate(inst, items, caps, limits)


def check_fpo_outcome(inst: Instance, out: MarketOutcome,
                      limits: VerifyLimits = VerifyLimits()) -> Certificate:
    """Fractional Pareto optimality of a fractional market outcome."""
    items = [ChoreCopy(c, 0) for c in range(inst.m)]
    caps = []
    for i in range(inst.n):
        caps.append(sum((out.x.x[i][c] * inst.d(i, c) for c in range(inst.m)), ZERO))
    return _fpo_certificate(inst, items, caps, limits)


def check_nondegenerate(inst: Instance,
                        limits: VerifyLimits = VerifyLimits()) -> Certificate:
    """No agent values two distinct chore subsets equally (2^m subset sums)."""
    if inst.m > limits.max_subset_chores:
        raise InstanceTooLargeError(
            f"2^{inst.m} subset sums exceed the configured cap")
    for i in range(inst.n):
        sums: dict[Fraction, int] = {ZERO: 0}
        for c in range(inst.m):
            cost = inst.d(i, c)
            bit = 1 << c
            updates: dict[Fraction, int] = {}
            for value, mask in sums.items():
                candidate = value + cost
                clash = sums.get(candidate, updates.get(candidate))
                if clash is not None:
                    return Certificate(NON_DEGENERATE, False, {
                        "agent": i,
                        "subset_a": _mask_to_ids(clash),
                        "subset_b": _mask_to_ids(mask | bit),
                        "sum": _fmt(candidate)})
                updates[candidate] = mask | bit
            sums.update(updates)
    return Certificate(NON_DEGENERATE, True)


def _mask_to_ids(mask: int) -> list[int]:
    return [b for b in range(mask.bit_length()) if mask >> b & 1]


@dataclass(frozen=True)
class ImplicationReport:
    """Concrete-input checks of the implication lattice between properties."""

    results: tuple[tuple[str, bool, bool], ...]  # (name, antecedent, consequent)

    @property
    def violations(self) -> list[str]:
        return [name for name, antecedent, consequent in self.results
                if antecedent and not consequent]

    @property
    def passed(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "implications": [
                {"name": name, "antecedent": antecedent, "consequent": consequent}
                for name, antecedent, consequent in self.results
            ],
            "violations": self.violations,
        }


def implication_suite(inst: Instance, alloc: SurplusAllocation, prices: PriceVector,
                      limits: VerifyLimits = VerifyLimits()) -> ImplicationReport:
    """Assert the property implications on one concrete allocation.

    Checks, each skipped gracefully when its antecedent fails: payment-EF1
    plus equilibrium forces EF1; EFX forces transfer-EFX; equilibrium forces
    fractional Pareto optimality; fractional forces integral Pareto
    optimality (the latter two only within brute-force limits).
    """
    fisher = check_fisher_integral(inst, alloc, prices)
    pef1 = check_pef1(prices, alloc)
    ef1 = check_ef1(inst, alloc)
    efx = check_efx(inst, alloc)
    tefx = check_tefx(inst, alloc)

    results = [
        ("pEF1+FisherEq=>EF1", pef1.holds and fisher.holds, ef1.holds),
        ("EFX=>tEFX", efx.holds, tefx.holds),
    ]
    try:
        fpo = check_fpo(inst, alloc, limits)
        results.append(("FisherEq=>fPO", fisher.holds, fpo.holds))
        try:
            po = check_po_brute(inst, alloc, limits)
            results.append(("fPO=>PO", fpo.holds, po.holds))
        except InstanceTooLargeError:
            pass
    except InstanceTooLargeError:
        pass
    return ImplicationReport(tuple(results))
