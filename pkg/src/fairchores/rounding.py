"""Round a verified near-equilibrium into integral bundles with few copies.

Phase 1 hands out fully-earned chores and prunes payment edges whose removal
keeps every single-removal payment above the income floor. Phase 2 walks each
remaining tree top-down, topping bundles up with child chores and duplicating
the parent chore as a last resort. The pipeline re-verifies every claimed
property before returning and hard-fails otherwise.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import networkx as nx

from .core import (
    ZERO,
    ChoreCopy,
    Instance,
    MarketOutcome,
    PriceVector,
    SurplusAllocation,
    bundle_payment,
    payment_graph,
)
from .equilibrium import (
    SearchLimits,
    approx_ceei,
    default_epsilon,
    exact_ceei,
    make_acyclic,
    verify_fisher_equilibrium,
)
from .errors import (
    BudgetExhaustedError,
    CertificateFailureError,
    InstanceTooLargeError,
    InvalidEquilibriumError,
    IsolatedChoreError,
    LoopInvariantError,
    OwnChoreCopyError,
    RedistributionDegreeError,
    ZeroDisutilityError,
)
from .verifiers import (
    Certificate,
    FPO,
    VerifyLimits,
    check_ef1,
    check_fisher_integral,
    check_fpo,
    check_pef1,
)


@dataclass
class RoundingState:
    """Mutable working state threaded through the two rounding phases."""

    inst: Instance
    prices: PriceVector
    epsilon: Fraction
    weights: dict[tuple[int, int], Fraction]
    agent_adj: list[set[int]]
    chore_adj: list[set[int]]
    bundles: list[set[int]]
    allocated: set[int]
    trace: list[dict] = field(default_factory=list)
    checkpoints: int = 0

    @classmethod
    def from_outcome(cls, inst: Instance, out: MarketOutcome) -> "RoundingState":
        if not verify_fisher_equilibrium(inst, out).passed:
            raise InvalidEquilibriumError("rounding requires a verified equilibrium")
        graph = payment_graph(out.x, out.prices)
        if not graph.is_acyclic():
            raise InvalidEquilibriumError("rounding requires an acyclic payment graph")
        weights = graph.edge_dict()
        agent_adj = [set() for _ in range(inst.n)]
        chore_adj = [set() for _ in range(inst.m)]
        for i, c in weights:
            agent_adj[i].add(c)
            chore_adj[c].add(i)
        return cls(inst, out.prices, out.epsilon, weights, agent_adj, chore_adj,
                   [set() for _ in range(inst.n)], set())

    def income(self, agent: int) -> Fraction:
        return sum((self.weights[(agent, c)] for c in self.agent_adj[agent]), ZERO)

    def bundle_price(self, agent: int) -> Fraction:
        return sum((self.prices[c] for c in self.bundles[agent]), ZERO)

    def checkpoint(self) -> None:
        """Income window every rounding proof leans on; violations are bugs."""
        floor = 1 - self.epsilon
        ceiling = 1 + (2 * self.inst.n - 1) * self.epsilon
        for i in range(self.inst.n):
            income = self.income(i)
            if not floor <= income <= ceiling:
                raise LoopInvariantError(
                    f"agent {i} income {income} left [{floor}, {ceiling}]")
        self.checkpoints += 1


def phase1(state: RoundingState) -> RoundingState:
    """Assign fully-earned chores and prune safely removable payment edges.

    Runs while some unallocated chore has a single neighbor: that chore goes
    to the neighbor, then one pass over the edges deletes every edge whose
    agent keeps all single-removal payments above the income floor, handing
    the deleted earning to the chore's other neighbors in equal shares.
    """
    inst, prices, eps = state.inst, state.prices, state.epsilon
    floor = 1 - eps
    state.checkpoint()
    while True:
        singles = sorted(
            c for c in range(inst.m)
            if c not in state.allocated and len(state.chore_adj[c]) == 1)
        if not singles:
            break
        for c in singles:
            owner = next(iter(state.chore_adj[c]))
            state.bundles[owner].add(c)
            state.allocated.add(c)
            state.trace.append({"event": "assign", "phase": 1, "agent": owner, "chore": c})
        state.checkpoint()

        for i, c in sorted(state.weights):
            if (i, c) not in state.weights:
                continue  # removed earlier in this pass
            combined = state.bundles[i] | {c}
            total = sum((prices[cc] for cc in combined), ZERO)
            priciest = max(prices[cc] for cc in combined)
            if total - priciest <= floor:
                continue
            degree = len(state.chore_adj[c])
            if degree == 1:
                if c in state.bundles[i]:
                    raise RedistributionDegreeError(
                        f"deletion picked the lone edge of allocated chore {c}")
                raise IsolatedChoreError(
                    f"deletion would isolate unallocated chore {c}")
            share = state.weights[(i, c)] / (degree - 1)
            others = sorted(state.chore_adj[c] - {i})
            for j in others:
                state.weights[(j, c)] += share
            del state.weights[(i, c)]
            state.agent_adj[i].discard(c)
            state.chore_adj[c].discard(i)
            state.trace.append({"event": "delete-edge", "agent": i, "chore": c})
            state.trace.append({"event": "redistribute", "chore": c,
                                "to": others, "share": str(share)})
            state.checkpoint()

    for c in range(inst.m):
        if c not in state.allocated and not state.chore_adj[c]:
            raise IsolatedChoreError(f"unallocated chore {c} has no payment edge")
    return state


def phase2(state: RoundingState) -> SurplusAllocation:
    """Top-down tree walk that completes the allocation with at most one copy
    per non-root agent."""
    inst, prices = state.inst, state.prices
    floor = 1 - state.epsilon
    copies: list[list[ChoreCopy]] = [[] for _ in range(inst.n)]
    copy_counter = [0] * inst.m

    graph = nx.Graph()
    graph.add_nodes_from(("a", i) for i in range(inst.n))
    graph.add_nodes_from(("c", c) for c in range(inst.m))
    graph.add_edges_from((("a", i), ("c", c)) for i, c in state.weights)
    components = sorted(
        (sorted(idx for kind, idx in nodes if kind == "a"),
         sorted(idx for kind, idx in nodes if kind == "c"))
        for nodes in nx.connected_components(graph))

    for agents, _ in components:
        if not agents:
            raise LoopInvariantError("a chore component lost all its agents")
        root = agents[0]
        # BFS over agents; each non-root agent remembers the chore above it.
        parent_chore: dict[int, Optional[int]] = {root: None}
        seen_chores: set[int] = set()
        queue = deque([root])
        order: list[int] = []
        while queue:
            i = queue.popleft()
            order.append(i)
            for c in sorted(state.agent_adj[i]):
                if c == parent_chore[i] or c in seen_chores:
                    continue
                seen_chores.add(c)
                for j in sorted(state.chore_adj[c]):
                    if j == i:
                        continue
                    if j in parent_chore:
                        raise LoopInvariantError("payment graph is not a forest")
                    parent_chore[j] = c
                    queue.append(j)

        for i in order:
            above = parent_chore[i]
            if above is not None and above not in state.allocated:
                state.bundles[i].add(above)
                state.allocated.add(above)
                state.trace.append({"event": "assign", "phase": 2, "agent": i, "chore": above})
            held = sum((prices[c] for c in state.bundles[i]), ZERO)
            for c in sorted(state.agent_adj[i]):
                if c in state.bundles[i] or c == above:
                    continue
                if held >= floor:
                    break
                if c in state.allocated:
                    raise LoopInvariantError(
                        f"child chore {c} was allocated before its parent agent ran")
                state.bundles[i].add(c)
                state.allocated.add(c)
                held += prices[c]
                state.trace.append({"event": "assign", "phase": 2, "agent": i, "chore": c})
            if held < floor:
                if above is None:
                    continue  # the root never needs a copy
                if above in state.bundles[i]:
                    raise OwnChoreCopyError(
                        f"agent {i} would copy chore {above} it already holds")
                copy_counter[above] += 1
                unit = ChoreCopy(above, copy_counter[above])
                copies[i].append(unit)
                state.trace.append({"event": "add-copy", "agent": i,
                                    "chore": above, "copy": unit.copy})

    bundles = tuple(
        frozenset(ChoreCopy(c, 0) for c in state.bundles[i]) | frozenset(copies[i])
        for i in range(inst.n))
    return SurplusAllocation(bundles, inst.m)


@dataclass(frozen=True)
class SolveOptions:
    exact: bool = False
    epsilon: Optional[Fraction] = None
    search_limits: SearchLimits = SearchLimits()
    verify_limits: VerifyLimits = VerifyLimits()


@dataclass(frozen=True)
class SurplusResult:
    alloc: SurplusAllocation
    prices: PriceVector
    epsilon: Fraction
    certificates: tuple[Certificate, ...]
    trace: tuple[dict, ...]
    checkpoints: int


def fair_and_efficient(inst: Instance, opts: SolveOptions = SolveOptions()) -> SurplusResult:
    """Full pipeline: equilibrium, cycle cancellation, two rounding phases.

    The output allocation covers every chore with at most n-1 duplicated
    units, pays every agent at least 1-eps with some chore whose removal dips
    below that, and is certified envy-free up to one chore and Pareto optimal
    before being returned.
    """
    if inst.has_zero_entry():
        raise ZeroDisutilityError("the surplus pipeline needs strictly positive disutilities")
    if inst.m == 0:
        alloc = SurplusAllocation(tuple(frozenset() for _ in range(inst.n)), 0)
        certificates = (
            check_fisher_integral(inst, alloc, PriceVector(())),
            check_pef1(PriceVector(()), alloc),
            check_ef1(inst, alloc),
            check_fpo(inst, alloc, opts.verify_limits),
        )
        return SurplusResult(alloc, PriceVector(()), ZERO, certificates, (), 0)

    wants_exact = opts.exact and opts.search_limits.admits(inst)
    if wants_exact:
        outcome = exact_ceei(inst, opts.search_limits)
    else:
        eps = opts.epsilon if opts.epsilon is not None else default_epsilon(inst.n, inst.m)
        try:
            outcome = approx_ceei(inst, eps)
        except BudgetExhaustedError:
            if not opts.search_limits.admits(inst):
                raise
            outcome = exact_ceei(inst, opts.search_limits)

    outcome = make_acyclic(inst, outcome)
    state = RoundingState.from_outcome(inst, outcome)
    phase1(state)
    alloc = phase2(state)
    eps = outcome.epsilon

    if alloc.surplus_count > inst.n - 1:
        raise CertificateFailureError(
            f"surplus {alloc.surplus_count} exceeds {inst.n - 1}")
    for i in range(inst.n):
        held = bundle_payment(outcome.prices, alloc.bundles[i])
        if held < 1 - eps:
            raise CertificateFailureError(f"agent {i} bundle pays {held} < 1-eps")
        slimmest = min(held - outcome.prices[u.chore] for u in alloc.bundles[i])
        if slimmest > 1 - eps:
            raise CertificateFailureError(
                f"agent {i} keeps more than 1-eps after every removal")

    fisher = check_fisher_integral(inst, alloc, outcome.prices)
    pef1 = check_pef1(outcome.prices, alloc)
    ef1 = check_ef1(inst, alloc)
    try:
        fpo = check_fpo(inst, alloc, opts.verify_limits)
    except InstanceTooLargeError:
        # Equilibrium outcomes are fractionally Pareto optimal, so the
        # equilibrium certificate substitutes when the linear programs would
        # be too large.
        fpo = Certificate(FPO, fisher.holds, {"via": "fisher-equilibrium"})
    certificates = (fisher, pef1, ef1, fpo)
    for certificate in certificates:
        if not certificate.holds:
            raise CertificateFailureError(
                f"{certificate.property} failed: {certificate.witness}")
    return SurplusResult(alloc, outcome.prices, eps, certificates,
                         tuple(state.trace), state.checkpoints)
