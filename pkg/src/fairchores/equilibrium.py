"""Competitive equilibria with equal incomes for chore markets.

Three entry points matter to callers: ``verify_fisher_equilibrium`` certifies a
candidate outcome, ``exact_ceei`` / ``approx_ceei`` produce verified outcomes,
and ``make_acyclic`` turns any verified outcome into one whose payment graph is
a forest without touching prices.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd, lcm
from typing import Optional

import networkx as nx

from ._flow import INF, FlowNetwork
from .core import (
    ZERO,
    FractionalAllocation,
    Instance,
    MarketOutcome,
    PriceVector,
    mpb,
    payment_graph,
    rat,
)
from .errors import (
    BudgetExhaustedError,
    EquilibriumNotFoundError,
    InputError,
    InstanceTooLargeError,
    InvalidEquilibriumError,
    ZeroDisutilityError,
)

DEFAULT_ROUNDS = 100_000


def default_epsilon(n: int, m: int) -> Fraction:
    """Income slack used by the surplus pipeline: 1/(5nm)."""
    return Fraction(1, 5 * n * m)


@dataclass(frozen=True)
class SearchLimits:
    """Size caps for the exhaustive equilibrium search."""

    max_agents: int = 4
    max_chores: int = 7

    def admits(self, inst: Instance) -> bool:
        return inst.n <= self.max_agents and inst.m <= self.max_chores


@dataclass(frozen=True)
class EquilibriumReport:
    """Result of checking the three equilibrium conditions, with witnesses."""

    clearing: bool
    incomes: bool
    min_pain_per_buck: bool
    clearing_witness: Optional[tuple[int, Fraction]] = None
    income_witness: Optional[tuple[int, Fraction]] = None
    mpb_witness: Optional[tuple[int, int]] = None

    @property
    def passed(self) -> bool:
        return self.clearing and self.incomes and self.min_pain_per_buck

    def to_dict(self) -> dict:
        from .serialize import fmt_rat

        witness = None
        if not self.clearing:
            chore, total = self.clearing_witness
            witness = {"condition": "clearing", "chore": chore, "allocated": fmt_rat(total)}
        elif not self.incomes:
            agent, income = self.income_witness
            witness = {"condition": "incomes", "agent": agent, "income": fmt_rat(income)}
        elif not self.min_pain_per_buck:
            agent, chore = self.mpb_witness
            witness = {"condition": "min-pain-per-buck", "agent": agent, "chore": chore}
        return {
            "clearing": self.clearing,
            "incomes": self.incomes,
            "min_pain_per_buck": self.min_pain_per_buck,
            "passed": self.passed,
            "witness": witness,
        }


def verify_fisher_equilibrium(inst: Instance, out: MarketOutcome) -> EquilibriumReport:
    """Check clearing, incomes, and the min-pain-per-buck condition.

    With ``epsilon == 0`` incomes must match the stated budgets exactly;
    otherwise every income must lie in [1-eps, 1+eps]. Verification always
    completes; a failing condition comes back with a witness.
    """
    if inst.n != out.n or inst.m != out.m:
        raise InputError("instance and outcome dimensions disagree")

    clearing, clearing_witness = True, None
    for c in range(inst.m):
        total = sum((out.x.x[i][c] for i in range(inst.n)), ZERO)
        if total != 1:
            clearing, clearing_witness = False, (c, total)
            break

    incomes_ok, income_witness = True, None
    for i in range(inst.n):
        income = out.income(i)
        if out.epsilon == 0:
            good = income == out.budgets[i]
        else:
            good = 1 - out.epsilon <= income <= 1 + out.epsilon
        if not good:
            incomes_ok, income_witness = False, (i, income)
            break

    mpb_ok, mpb_witness = True, None
    if inst.m > 0:
        for i in range(inst.n):
            best, _ = mpb(inst, out.prices, i)
            for c in range(inst.m):
                if out.x.x[i][c] > 0 and inst.d(i, c) / out.prices[c] != best:
                    mpb_ok, mpb_witness = False, (i, c)
                    break
            if not mpb_ok:
                break

    return EquilibriumReport(clearing, incomes_ok, mpb_ok,
                             clearing_witness, income_witness, mpb_witness)


# ---------------------------------------------------------------------------
# Exact equilibrium by support enumeration
# ---------------------------------------------------------------------------

def _enumerate_supports(n: int, m: int):
    """Yield candidate supports in canonical order, with component bitmasks.

    A support is a set of agent-chore edges forming a forest in which every
    agent and every chore has degree >= 1. Supports come out by edge count
    ascending, then lexicographically on the sorted edge tuple, edges ordered
    by (agent, chore) with edge id ``i*m + c``. Each yield carries the live
    ``chosen`` edge-id list plus one edge bitmask per connected component, so
    the caller can memoize per-component work across supports.
    """
    total = n * m
    parent = list(range(n + m))  # union-find over agents [0,n) and chores [n,n+m)
    mask = [0] * (n + m)  # edge bitmask per union-find root

    def find(a: int) -> int:
        while parent[a] != a:
            a = parent[a]
        return a

    agent_deg = [0] * n
    chore_deg = [0] * m
    chosen: list[int] = []

    def rec(start: int, remaining: int):
        if remaining == 0:
            if 0 not in agent_deg and 0 not in chore_deg:
                roots = {find(e // m) for e in chosen}
                yield chosen, [mask[r] for r in roots]
            return
        if total - start < remaining:
            return
        if remaining < max(agent_deg.count(0), chore_deg.count(0)):
            return
        for idx in range(start, total):
            i, c = divmod(idx, m)
            ra, rc = find(i), find(n + c)
            if ra != rc:
                saved = mask[rc]
                parent[ra] = rc
                mask[rc] = mask[ra] | saved | (1 << idx)
                agent_deg[i] += 1
                chore_deg[c] += 1
                chosen.append(idx)
                yield from rec(idx + 1, remaining - 1)
                chosen.pop()
                agent_deg[i] -= 1
                chore_deg[c] -= 1
                parent[ra] = ra
                mask[rc] = saved
            # Skipping past a node's final candidate edge dooms the branch.
            if agent_deg[i] == 0 and idx == i * m + m - 1:
                return
            if chore_deg[c] == 0 and idx == (n - 1) * m + c:
                return

    for k in range(max(n, m), n + m):
        yield from rec(0, k)


def _forest_supports(n: int, m: int):
    """Candidate supports as (agent, chore) tuples, in canonical order."""
    for chosen, _ in _enumerate_supports(n, m):
        yield tuple(divmod(e, m) for e in chosen)


class _Component:
    """One tree of a support, solved in scaled integer arithmetic.

    Prices inside the component are ``agents_count * F[c] / T``; earnings are
    stored scaled by ``T`` so the whole leaf-stripping pass stays in integers.
    """

    __slots__ = ("agents", "chores", "count", "T", "F", "ratio", "earn")

    def __init__(self, agents, chores, count, T, F, ratio, earn):
        self.agents = agents
        self.chores = chores
        self.count = count
        self.T = T
        self.F = F
        self.ratio = ratio
        self.earn = earn


def _solve_component(D, edges) -> Optional[_Component]:
    agents = sorted({i for i, _ in edges})
    chores = sorted({c for _, c in edges})
    adj_a: dict[int, list[int]] = {i: [] for i in agents}
    adj_c: dict[int, list[int]] = {c: [] for c in chores}
    for i, c in edges:
        adj_a[i].append(c)
        adj_c[c].append(i)

    base = chores[0]
    fnum = {base: 1}
    fden = {base: 1}
    frontier = [(1, base)]
    seen_a: set[int] = set()
    while frontier:
        kind, node = frontier.pop()
        if kind == 1:
            for i in adj_c[node]:
                if i not in seen_a:
                    seen_a.add(i)
                    frontier.append((0, i))
        else:
            row = D[node]
            anchor = next(c for c in adj_a[node] if c in fnum)
            for c in adj_a[node]:
                if c not in fnum:
                    frontier.append((1, c))
                    num = fnum[anchor] * row[c]
                    den = fden[anchor] * row[anchor]
                    g = gcd(num, den)
                    fnum[c] = num // g
                    fden[c] = den // g

    common = lcm(*(fden[c] for c in chores))
    F = {c: fnum[c] * (common // fden[c]) for c in chores}
    T = sum(F.values())
    count = len(agents)

    # Leaf stripping with everything scaled by T: chores demand count*F[c],
    # agents demand T (their unit income).
    need = {(1, c): count * F[c] for c in chores}
    need.update(((0, i), T) for i in agents)
    left = {(1, c): set(adj_c[c]) for c in chores}
    left.update(((0, i), set(adj_a[i])) for i in agents)
    queue = [v for v, nbrs in left.items() if len(nbrs) == 1]
    earn: dict[tuple[int, int], int] = {}
    stripped = 0
    while queue:
        v = queue.pop()
        if len(left[v]) != 1:
            continue
        other = next(iter(left[v]))
        if v[0] == 1:
            edge, u = (other, v[1]), (0, other)
        else:
            edge, u = (v[1], other), (1, other)
        amount = need[v]
        if amount < 0 or amount > count * F[edge[1]]:
            return None
        earn[edge] = amount
        need[u] -= amount
        need[v] = 0
        left[u].discard(v[1])
        left[v].clear()
        stripped += 1
        if len(left[u]) == 1:
            queue.append(u)
    if stripped != len(agents) + len(chores) - 1:
        return None
    if any(need[(0, i)] != 0 for i in agents) or any(need[(1, c)] != 0 for c in chores):
        return None

    # Ratio each agent attains on her support edges, as an integer pair; used
    # to reject supports where some other chore pays strictly better.
    ratio: dict[int, tuple[int, int]] = {}
    for i in agents:
        anchor = adj_a[i][0]
        num, den = D[i][anchor] * T, count * F[anchor]
        ratio[i] = (num, den)
        for c in chores:
            # d_i(c)/p_c >= d_i(anchor)/p_anchor within the component.
            if D[i][c] * F[anchor] < D[i][anchor] * F[c]:
                return None
    return _Component(tuple(agents), tuple(chores), count, T, F, ratio, earn)


def _components_compatible(D, one: _Component, other: _Component) -> bool:
    """No agent of ``one`` finds a strictly better ratio among ``other``'s chores."""
    for i in one.agents:
        num, den = one.ratio[i]
        row = D[i]
        for c in other.chores:
            if row[c] * other.T * den < num * other.count * other.F[c]:
                return False
    return True


def exact_ceei(inst: Instance, limits: SearchLimits = SearchLimits()) -> MarketOutcome:
    """First equal-income equilibrium in canonical support order, exactly.

    Exhaustive over forest supports, so only permitted on small instances.
    Component solutions and pairwise compatibility checks are memoized across
    supports, which leaves the canonical order untouched while skipping the
    bulk of repeated work. The returned outcome passes
    ``verify_fisher_equilibrium`` at epsilon 0 with every budget equal to 1.
    """
    if inst.m == 0:
        raise InputError("no chores: equal unit incomes are unattainable")
    if inst.has_zero_entry():
        raise ZeroDisutilityError("exact search requires strictly positive disutilities")
    if not limits.admits(inst):
        raise InstanceTooLargeError(
            f"{inst.n} agents x {inst.m} chores exceeds search limits "
            f"({limits.max_agents} x {limits.max_chores})")

    n, m = inst.n, inst.m
    # A common rescale of all disutilities changes neither ratios nor incomes,
    # so the search can run on an all-integer matrix.
    scale = lcm(*(value.denominator for row in inst.disutility for value in row))
    D = [[int(value * scale) for value in row] for row in inst.disutility]

    missing = object()
    comp_cache: dict[int, Optional[_Component]] = {}
    pair_cache: dict[tuple[int, int], bool] = {}

    for _, masks in _enumerate_supports(n, m):
        solved: list[_Component] = []
        feasible = True
        for key in masks:
            comp = comp_cache.get(key, missing)
            if comp is missing:
                edges = []
                bits = key
                while bits:
                    low = bits & -bits
                    edges.append(divmod(low.bit_length() - 1, m))
                    bits ^= low
                comp = _solve_component(D, edges)
                comp_cache[key] = comp
            if comp is None:
                feasible = False
                break
            solved.append(comp)
        if not feasible:
            continue

        for a in range(len(solved)):
            for b in range(len(solved)):
                if a == b:
                    continue
                pair = (masks[a], masks[b])
                good = pair_cache.get(pair)
                if good is None:
                    good = _components_compatible(D, solved[a], solved[b])
                    pair_cache[pair] = good
                if not good:
                    feasible = False
                    break
            if not feasible:
                break
        if not feasible:
            continue

        prices: list[Fraction] = [ZERO] * m
        rows = [[ZERO] * m for _ in range(n)]
        for comp in solved:
            for c in comp.chores:
                prices[c] = Fraction(comp.count * comp.F[c], comp.T)
            for (i, c), amount in comp.earn.items():
                rows[i][c] = Fraction(amount, comp.count * comp.F[c])
        x = FractionalAllocation(tuple(tuple(row) for row in rows))
        outcome = MarketOutcome.ceei_candidate(x, PriceVector(tuple(prices)), ZERO)
        if verify_fisher_equilibrium(inst, outcome).passed:
            return outcome
        raise EquilibriumNotFoundError(
            "support solver accepted an outcome the verifier rejects; this is a bug")
    raise EquilibriumNotFoundError(
        "support enumeration exhausted without an equilibrium; this is a bug")


# ---------------------------------------------------------------------------
# Approximate equilibrium by earning-balancing price adjustment
# ---------------------------------------------------------------------------

def _mpb_structure(inst: Instance, prices: list[Fraction]):
    values: list[Fraction] = []
    sets: list[frozenset[int]] = []
    for i in range(inst.n):
        ratios = [inst.d(i, c) / prices[c] for c in range(inst.m)]
        best = min(ratios)
        values.append(best)
        sets.append(frozenset(c for c, r in enumerate(ratios) if r == best))
    return values, sets


def _route_within_bounds(n, m, prices, mpb_sets, lo, hi):
    """Earnings routing with every chore saturated and incomes in [lo, hi].

    Standard lower-bound reduction on the circulation s -> chores -> agents ->
    t -> s. Returns the earning of each MPB edge, or None when infeasible.
    """
    net = FlowNetwork()
    total = sum(prices, ZERO)
    edge_index: dict[tuple[int, int], int] = {}
    for c in range(m):
        net.add_edge("SS", ("c", c), prices[c])
    net.add_edge("s", "TT", total)
    for i in range(n):
        for c in sorted(mpb_sets[i]):
            edge_index[(i, c)] = net.add_edge(("c", c), ("a", i), INF)
        net.add_edge(("a", i), "t", hi - lo)
        net.add_edge(("a", i), "TT", lo)
    net.add_edge("SS", "t", lo * n)
    net.add_edge("t", "s", INF)
    value = net.max_flow("SS", "TT")
    if value != total + lo * n:
        return None
    return {edge: net.flow_value(idx) for edge, idx in edge_index.items()}


def _route_plain(n, m, prices, mpb_sets, hi):
    """Cap-only routing; used for diagnosing which side is stuck."""
    net = FlowNetwork()
    supply_idx = []
    income_idx = []
    for c in range(m):
        supply_idx.append(net.add_edge("s", ("c", c), prices[c]))
    edge_index: dict[tuple[int, int], int] = {}
    for i in range(n):
        for c in sorted(mpb_sets[i]):
            edge_index[(i, c)] = net.add_edge(("c", c), ("a", i), INF)
    for i in range(n):
        income_idx.append(net.add_edge(("a", i), "t", hi))
    net.max_flow("s", "t")
    return net, supply_idx, income_idx, edge_index


def _outcome_from_earnings(inst, prices, earnings, epsilon) -> MarketOutcome:
    rows = [[ZERO] * inst.m for _ in range(inst.n)]
    for (i, c), amount in earnings.items():
        rows[i][c] = amount / prices[c]
    x = FractionalAllocation(tuple(tuple(row) for row in rows))
    return MarketOutcome.ceei_candidate(x, PriceVector(tuple(prices)), epsilon)


def approx_ceei(inst: Instance, epsilon, max_rounds: int = DEFAULT_ROUNDS) -> MarketOutcome:
    """Equilibrium with incomes within [1-eps, 1+eps], by price adjustment.

    Every round routes chore payments to agents along current best-ratio edges
    with a capacitated flow. When routing fails, the blocked side of the
    market identifies a set of chores whose prices rise multiplicatively, by
    exactly the factor that lets the next agent-chore pair join the best-ratio
    graph. The returned outcome is re-verified before being accepted, so the
    adjustment policy affects speed, never soundness.
    """
    if inst.m == 0:
        raise InputError("no chores: equal unit incomes are unattainable")
    if inst.has_zero_entry():
        raise ZeroDisutilityError("price adjustment requires strictly positive disutilities")
    eps = rat(epsilon)
    if not 0 < eps < 1:
        raise InputError("epsilon must lie strictly between 0 and 1")

    n, m = inst.n, inst.m
    lo, hi = 1 - eps, 1 + eps
    mean = [sum((inst.d(i, c) for i in range(n)), ZERO) / n for c in range(m)]
    mean_total = sum(mean, ZERO)
    prices = [n * mean[c] / mean_total for c in range(m)]

    for _ in range(max_rounds):
        total = sum(prices, ZERO)
        if total > 2 * n or total < Fraction(n, 2):
            scale = Fraction(n) / total
            rounded = scale.limit_denominator(10**9)
            if rounded > 0:
                scale = rounded
            prices = [value * scale for value in prices]

        mpb_values, mpb_sets = _mpb_structure(inst, prices)
        earnings = _route_within_bounds(n, m, prices, mpb_sets, lo, hi)
        if earnings is not None:
            outcome = _outcome_from_earnings(inst, prices, earnings, eps)
            if verify_fisher_equilibrium(inst, outcome).passed:
                return outcome
            raise BudgetExhaustedError("routed outcome failed verification; this is a bug")

        net, supply_idx, income_idx, edge_index = _route_plain(n, m, prices, mpb_sets, hi)
        unrouted = [c for c in range(m) if net.flow_value(supply_idx[c]) < prices[c]]
        if unrouted:
            # Overpriced side: its neighborhood is income-saturated, so raise
            # the blocked chores until a fresh agent's ratio ties.
            reach = net.reachable("s")
            blocked = [c for c in range(m) if ("c", c) in reach]
            inside = {i for i in range(n) if ("a", i) in reach}
            factors = [inst.d(i, c) / prices[c] / mpb_values[i]
                       for i in range(n) if i not in inside
                       for c in blocked]
        else:
            incomes = [net.flow_value(income_idx[i]) for i in range(n)]
            poor = [i for i in range(n) if incomes[i] < lo]
            if not poor:
                earnings = {edge: net.flow_value(idx) for edge, idx in edge_index.items()}
                outcome = _outcome_from_earnings(inst, prices, earnings, eps)
                if verify_fisher_equilibrium(inst, outcome).passed:
                    return outcome
                raise BudgetExhaustedError("routing disagreed with itself; this is a bug")
            # Underpaid side: everything reachable by the poor agents is too
            # cheap relative to the rest, so raise the rest until one of the
            # agents stuck on the cheap chores gains an edge out.
            cheap = set()
            for i in poor:
                cheap |= mpb_sets[i]
            stuck = [i for i in range(n) if mpb_sets[i] <= cheap]
            blocked = [c for c in range(m) if c not in cheap]
            factors = [inst.d(i, c) / prices[c] / mpb_values[i]
                       for i in stuck for c in blocked]

        if not factors:
            scale = Fraction(n) / sum(prices, ZERO)
            prices = [value * scale for value in prices]
            continue
        lam = min(factors)
        for c in blocked:
            prices[c] *= lam

    raise BudgetExhaustedError(
        f"no verified outcome within {max_rounds} price-adjustment rounds")


# ---------------------------------------------------------------------------
# Cycle cancellation
# ---------------------------------------------------------------------------

def make_acyclic(inst: Instance, out: MarketOutcome) -> MarketOutcome:
    """Equivalent equilibrium whose payment graph is a forest.

    Earnings shift alternately around each cycle by the cycle's minimum edge
    weight, which cancels that edge while preserving prices, incomes and the
    support inclusion. Each step removes at least one edge.
    """
    if not verify_fisher_equilibrium(inst, out).passed:
        raise InvalidEquilibriumError("make_acyclic requires a verified equilibrium")

    weights = payment_graph(out.x, out.prices).edge_dict()

    def build_graph() -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(("a", i) for i in range(out.n))
        graph.add_nodes_from(("c", c) for c in range(out.m))
        graph.add_edges_from((("a", i), ("c", c)) for i, c in weights)
        return graph

    def weight_of(u, v) -> Fraction:
        pair = (u[1], v[1]) if u[0] == "a" else (v[1], u[1])
        return weights[pair]

    while True:
        graph = build_graph()
        try:
            cycle = nx.find_cycle(graph)
        except nx.NetworkXNoCycle:
            break
        seq = [u for u, _ in cycle]
        length = len(seq)
        k = min(range(length), key=lambda j: weight_of(seq[j], seq[(j + 1) % length]))
        if seq[k][0] == "a":
            order = [seq[(k + j) % length] for j in range(length)]
        else:
            order = [seq[(k + 1 - j) % length] for j in range(length)]
        agents = [node[1] for node in order[0::2]]
        chores = [node[1] for node in order[1::2]]
        shift = weights[(agents[0], chores[0])]
        half = len(agents)
        for j in range(half):
            forward = (agents[j], chores[j])
            backward = (agents[(j + 1) % half], chores[j])
            weights[forward] -= shift
            if weights[forward] == 0:
                del weights[forward]
            weights[backward] = weights.get(backward, ZERO) + shift

    rows = [[ZERO] * out.m for _ in range(out.n)]
    for (i, c), earned in weights.items():
        rows[i][c] = earned / out.prices[c]
    x = FractionalAllocation(tuple(tuple(row) for row in rows))
    result = MarketOutcome(x, out.prices, out.budgets, out.epsilon)
    if not verify_fisher_equilibrium(inst, result).passed:
        raise InvalidEquilibriumError("cycle cancellation broke the equilibrium; this is a bug")
    return result
