"""Instance, allocation and price data model, plus the elementary evaluations.

All numeric quantities are exact rationals (`fractions.Fraction`); nothing in
the algorithmic pipeline ever rounds. Values are immutable and safe to share
across threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, NamedTuple

import networkx as nx

from .errors import InputError

# Exact rational scalar used everywhere in the pipeline.
Rat = Fraction

ZERO = Fraction(0)
ONE = Fraction(1)


def rat(value) -> Fraction:
    """Coerce ints / strings like '2/3' / decimal strings to an exact Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, bool):
        raise InputError(f"not a rational: {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, float):
        # Exact value of the printed decimal form, not of the binary float.
        return Fraction(repr(value))
    if isinstance(value, str):
        try:
            return Fraction(value)
        except (ValueError, ZeroDivisionError) as exc:
            raise InputError(f"not a rational: {value!r}") from exc
    raise InputError(f"not a rational: {value!r}")


class ChoreCopy(NamedTuple):
    """One physical unit of work: the original chore (copy 0) or a duplicate."""

    chore: int
    copy: int = 0


def originals(chores: Iterable[int]) -> frozenset[ChoreCopy]:
    """Wrap plain chore ids as copy-0 units."""
    return frozenset(ChoreCopy(c, 0) for c in chores)


@dataclass(frozen=True)
class Instance:
    """A chore-division instance: ``n`` agents, ``m`` chores, disutility matrix.

    ``disutility[i][c]`` is how much agent ``i`` dislikes chore ``c``; bundles
    are valued additively. Entries must be non-negative rationals.
    """

    disutility: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        if not self.disutility:
            raise InputError("instance needs at least one agent")
        widths = {len(row) for row in self.disutility}
        if len(widths) != 1:
            raise InputError("disutility rows have inconsistent lengths")
        for row in self.disutility:
            for value in row:
                if not isinstance(value, Fraction):
                    raise InputError("disutility entries must be Fractions")
                if value < 0:
                    raise InputError("disutility entries must be non-negative")

    @classmethod
    def from_rows(cls, rows) -> "Instance":
        return cls(tuple(tuple(rat(v) for v in row) for row in rows))

    @property
    def n(self) -> int:
        return len(self.disutility)

    @property
    def m(self) -> int:
        return len(self.disutility[0])

    def d(self, agent: int, chore: int) -> Fraction:
        return self.disutility[agent][chore]

    def total(self, agent: int) -> Fraction:
        """Disutility of the whole chore set for one agent."""
        return sum(self.disutility[agent], ZERO)

    def has_zero_entry(self) -> bool:
        return any(v == 0 for row in self.disutility for v in row)


@dataclass(frozen=True)
class FractionalAllocation:
    """An n x m matrix of fractions; every chore's column sums to exactly 1."""

    x: tuple[tuple[Fraction, ...], ...]

    def __post_init__(self):
        for row in self.x:
            for value in row:
                if value < 0 or value > 1:
                    raise InputError("allocation fractions must lie in [0, 1]")
        for c in range(self.m):
            column = sum((row[c] for row in self.x), ZERO)
            if column != 1:
                raise InputError(f"chore {c} is allocated {column}, expected exactly 1")

    @classmethod
    def from_rows(cls, rows) -> "FractionalAllocation":
        return cls(tuple(tuple(rat(v) for v in row) for row in rows))

    @property
    def n(self) -> int:
        return len(self.x)

    @property
    def m(self) -> int:
        return len(self.x[0]) if self.x else 0


@dataclass(frozen=True)
class PriceVector:
    """Strictly positive chore prices. Copies always cost what the original costs."""

    p: tuple[Fraction, ...]

    def __post_init__(self):
        for value in self.p:
            if value <= 0:
                raise InputError("prices must be strictly positive")

    @classmethod
    def from_values(cls, values) -> "PriceVector":
        return cls(tuple(rat(v) for v in values))

    def __len__(self) -> int:
        return len(self.p)

    def __getitem__(self, chore: int) -> Fraction:
        return self.p[chore]

    def __iter__(self):
        return iter(self.p)

    def total(self) -> Fraction:
        return sum(self.p, ZERO)


@dataclass(frozen=True)
class MarketOutcome:
    """A fractional allocation together with prices, liabilities and slack.

    ``budgets[i]`` is the amount agent ``i`` is supposed to earn (all 1 for an
    equal-incomes equilibrium); ``epsilon`` is the allowed relative income
    slack, 0 for an exact equilibrium.
    """

    x: FractionalAllocation
    prices: PriceVector
    budgets: tuple[Fraction, ...]
    epsilon: Fraction

    def __post_init__(self):
        if self.x.m != len(self.prices):
            raise InputError("allocation and price vector disagree on chore count")
        if self.x.n != len(self.budgets):
            raise InputError("allocation and budgets disagree on agent count")
        if self.epsilon < 0:
            raise InputError("epsilon must be non-negative")

    @classmethod
    def ceei_candidate(cls, x: FractionalAllocation, prices: PriceVector,
                       epsilon: Fraction = ZERO) -> "MarketOutcome":
        return cls(x, prices, (ONE,) * x.n, epsilon)

    @property
    def n(self) -> int:
        return self.x.n

    @property
    def m(self) -> int:
        return self.x.m

    def earning(self, agent: int, chore: int) -> Fraction:
        return self.x.x[agent][chore] * self.prices[chore]

    def income(self, agent: int) -> Fraction:
        return sum((self.earning(agent, c) for c in range(self.m)), ZERO)


@dataclass(frozen=True)
class SurplusAllocation:
    """Integral bundles over chore copies.

    Every original chore appears somewhere; ``surplus_count`` counts the extra
    duplicated units beyond the ``num_chores`` originals.
    """

    bundles: tuple[frozenset[ChoreCopy], ...]
    num_chores: int

    def __post_init__(self):
        seen: set[ChoreCopy] = set()
        covered: set[int] = set()
        for bundle in self.bundles:
            for unit in bundle:
                if unit in seen:
                    raise InputError(f"chore copy {unit} appears in two bundles")
                seen.add(unit)
                if not 0 <= unit.chore < self.num_chores:
                    raise InputError(f"chore id {unit.chore} out of range")
                covered.add(unit.chore)
        if len(covered) != self.num_chores:
            missing = sorted(set(range(self.num_chores)) - covered)
            raise InputError(f"chores never allocated: {missing}")

    @property
    def n(self) -> int:
        return len(self.bundles)

    @property
    def surplus_count(self) -> int:
        return sum(len(b) for b in self.bundles) - self.num_chores

    def items(self) -> list[ChoreCopy]:
        """All allocated units (originals and copies), in a canonical order."""
        return sorted(unit for bundle in self.bundles for unit in bundle)


@dataclass(frozen=True)
class PaymentGraph:
    """Bipartite agent-chore graph weighted by earnings x[i][c] * p[c].

    An edge is present exactly where the earning is positive. The graph is the
    object the rounding algorithm manipulates: its acyclicity and connected
    components drive the second phase.
    """

    n: int
    m: int
    weights: tuple[tuple[tuple[int, int], Fraction], ...]

    @classmethod
    def from_edges(cls, n: int, m: int, weights: dict[tuple[int, int], Fraction]) -> "PaymentGraph":
        items = tuple(sorted((edge, w) for edge, w in weights.items() if w > 0))
        return cls(n, m, items)

    def edge_dict(self) -> dict[tuple[int, int], Fraction]:
        return dict(self.weights)

    def weight(self, agent: int, chore: int) -> Fraction:
        return self.edge_dict().get((agent, chore), ZERO)

    def agent_neighbors(self, agent: int) -> list[int]:
        return sorted(c for (i, c), _ in self.weights if i == agent)

    def chore_neighbors(self, chore: int) -> list[int]:
        return sorted(i for (i, c), _ in self.weights if c == chore)

    def chore_payment(self, chore: int) -> Fraction:
        return sum((w for (_, c), w in self.weights if c == chore), ZERO)

    def agent_income(self, agent: int) -> Fraction:
        return sum((w for (i, _), w in self.weights if i == agent), ZERO)

    def to_networkx(self) -> nx.Graph:
        graph = nx.Graph()
        graph.add_nodes_from(("a", i) for i in range(self.n))
        graph.add_nodes_from(("c", c) for c in range(self.m))
        for (i, c), w in self.weights:
            graph.add_edge(("a", i), ("c", c), weight=w)
        return graph

    def is_acyclic(self) -> bool:
        return nx.is_forest(self.to_networkx()) if self.weights else True

    def components(self) -> list[tuple[frozenset[int], frozenset[int]]]:
        """Connected components as (agents, chores) pairs, including isolated nodes."""
        graph = self.to_networkx()
        result = []
        for nodes in nx.connected_components(graph):
            agents = frozenset(idx for kind, idx in nodes if kind == "a")
            chores = frozenset(idx for kind, idx in nodes if kind == "c")
            result.append((agents, chores))
        result.sort(key=lambda pair: (min(pair[0], default=self.n), min(pair[1], default=self.m)))
        return result


def bundle_disutility(inst: Instance, agent: int, units: Iterable[ChoreCopy]) -> Fraction:
    """Additive disutility of a set of chore copies; copies count like originals."""
    total = ZERO
    for unit in units:
        total += inst.disutility[agent][unit.chore]
    return total


def bundle_payment(prices: PriceVector, units: Iterable[ChoreCopy]) -> Fraction:
    """Total price of a set of chore copies; copies are priced like originals."""
    total = ZERO
    for unit in units:
        total += prices[unit.chore]
    return total


def mpb(inst: Instance, prices: PriceVector, agent: int) -> tuple[Fraction, frozenset[int]]:
    """Minimum pain per buck of one agent: the best ratio d(c)/p(c) and its argmin set."""
    if inst.m == 0:
        raise InputError("pain per buck is undefined without chores")
    ratios = [inst.disutility[agent][c] / prices[c] for c in range(inst.m)]
    best = min(ratios)
    return best, frozenset(c for c, r in enumerate(ratios) if r == best)


def payment_graph(x: FractionalAllocation, prices: PriceVector) -> PaymentGraph:
    """Earning-weighted bipartite graph of a market outcome."""
    if x.m != len(prices):
        raise InputError("allocation and price vector disagree on chore count")
    weights = {}
    for i in range(x.n):
        for c in range(x.m):
            if x.x[i][c] > 0:
                weights[(i, c)] = x.x[i][c] * prices[c]
    return PaymentGraph.from_edges(x.n, x.m, weights)
