"""Three-agent chore division: a transfer-EFX or proportional allocation.

The solver perturbs the instance so no two distinct sets tie, seeds the
partition with a greedy split that is EFX under the first agent's costs, and
then walks through partitions maintaining three loop invariants until either a
consistent assignment exists (transfer-EFX) or the walk exits through the
proportional branch. The final certificate is always re-verified against the
original, unperturbed instance.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import lcm
from typing import Optional, Sequence

from .core import ChoreCopy, Instance, SurplusAllocation, rat
from .errors import (
    CertificateFailureError,
    LoopInvariantError,
    NonTerminationError,
    WrongAgentCountError,
)
from .verifiers import Certificate, check_proportional, check_tefx

Partition3 = tuple[frozenset[int], frozenset[int], frozenset[int]]


def perturb_nondegenerate(inst: Instance) -> tuple[Instance, Fraction]:
    """Additively perturb so every agent values distinct sets distinctly.

    Chore ``j`` (0-based) gains ``eps * 2^(j+1)``; distinct subsets then get
    distinct binary fingerprints. With ``D`` the common denominator of all
    entries, two distinct subset sums of the original instance differ by at
    least ``1/D``, so ``eps = 1 / (2 D 2^(m+1))`` keeps every strict original
    comparison strict after perturbation.
    """
    m = inst.m
    common = lcm(*(value.denominator for row in inst.disutility for value in row))
    eps = Fraction(1, 2 * common * 2 ** (m + 1))
    rows = tuple(
        tuple(value + eps * 2 ** (j + 1) for j, value in enumerate(row))
        for row in inst.disutility)
    return Instance(rows), eps


def efx_identical(costs: Sequence, n: int) -> tuple[frozenset[int], ...]:
    """Greedy split that is EFX when every agent shares the given costs.

    Chores are placed in non-increasing cost order (ties by ascending id),
    each going to the currently cheapest bundle (ties by ascending bundle
    index).
    """
    costs = [rat(v) for v in costs]
    bundles: list[set[int]] = [set() for _ in range(n)]
    totals = [Fraction(0)] * n
    for c in sorted(range(len(costs)), key=lambda c: (-costs[c], c)):
        target = min(range(n), key=lambda k: (totals[k], k))
        bundles[target].add(c)
        totals[target] += costs[c]
    return tuple(frozenset(b) for b in bundles)


def _cost(inst: Instance, agent: int, chores) -> Fraction:
    return sum((inst.d(agent, c) for c in chores), Fraction(0))


def tefx_feasible(inst: Instance, agent: int, k: int, partition) -> bool:
    """Whether bundle ``k`` stays unenvied by ``agent`` after any single transfer.

    Additivity means only the cheapest chore of the bundle needs checking.
    """
    bundle = partition[k]
    if not bundle:
        return True
    drop = min(inst.d(agent, c) for c in bundle)
    total = _cost(inst, agent, bundle)
    for j in range(len(partition)):
        if j == k:
            continue
        if total - drop > _cost(inst, agent, partition[j]) + drop:
            return False
    return True


def terminal_assignment(inst: Instance, partition) -> Optional[dict[int, int]]:
    """Match agents to bundles everyone accepts, if possible.

    Agents 0 and 2 accept their transfer-EFX-feasible bundles; agent 1
    accepts her cheapest bundle(s). Returns the lexicographically smallest
    perfect matching as an agent-to-bundle map, or None.
    """
    acceptable = [set(), set(), set()]
    for k in range(3):
        if tefx_feasible(inst, 0, k, partition):
            acceptable[0].add(k)
        if tefx_feasible(inst, 2, k, partition):
            acceptable[2].add(k)
    costs = [_cost(inst, 1, partition[k]) for k in range(3)]
    cheapest = min(costs)
    acceptable[1] = {k for k in range(3) if costs[k] == cheapest}
    for b0 in sorted(acceptable[0]):
        for b1 in sorted(acceptable[1] - {b0}):
            for b2 in sorted(acceptable[2] - {b0, b1}):
                return {0: b0, 1: b1, 2: b2}
    return None


@dataclass(frozen=True)
class ThreeResult:
    kind: str  # "tEFX" or "Proportional"
    alloc: SurplusAllocation  # bundle per agent, no copies
    assignment: tuple[int, int, int]  # bundle label handed to each agent
    certificate: Certificate
    trace: tuple[dict, ...]
    iterations: int


def _check_invariants(pert: Instance, bundles: list[frozenset[int]]) -> None:
    for k in (0, 1):
        if not tefx_feasible(pert, 0, k, bundles):
            raise LoopInvariantError(f"bundle {k} lost feasibility for agent 0")
        if bundles[k]:
            worst = _cost(pert, 0, bundles[k]) - min(pert.d(0, c) for c in bundles[k])
            if worst > _cost(pert, 0, bundles[2]):
                raise LoopInvariantError(
                    f"bundle {k} minus a chore exceeds bundle 2 for agent 0")
    if not tefx_feasible(pert, 2, 2, bundles):
        raise LoopInvariantError("bundle 2 lost feasibility for agent 2")


def _result(inst: Instance, bundles_by_agent, assignment, kind, trace, iterations) -> ThreeResult:
    alloc = SurplusAllocation(
        tuple(frozenset(ChoreCopy(c, 0) for c in bundle) for bundle in bundles_by_agent),
        inst.m)
    if kind == "tEFX":
        certificate = check_tefx(inst, alloc)
    else:
        certificate = check_proportional(inst, alloc)
    if not certificate.holds:
        raise CertificateFailureError(
            f"{kind} claim failed on the original instance: {certificate.witness}")
    return ThreeResult(kind, alloc, tuple(assignment), certificate,
                       tuple(trace), iterations)


def solve_three(inst: Instance) -> ThreeResult:
    """Partition three agents' chores into a tEFX or proportional allocation."""
    if inst.n != 3:
        raise WrongAgentCountError(f"expected 3 agents, got {inst.n}")
    m = inst.m
    pert, _ = perturb_nondegenerate(inst)

    greedy = efx_identical(pert.disutility[0], 3)
    # Labels sorted so agent 2 ranks them: bundle2 <= bundle0 <= bundle1.
    by_agent2 = sorted(range(3), key=lambda k: (_cost(pert, 2, greedy[k]), k))
    bundles = [greedy[by_agent2[1]], greedy[by_agent2[2]], greedy[by_agent2[0]]]

    trace: list[dict] = []
    previous_phi: Optional[int] = None

    for iteration in range(m + 1):
        swapped = False
        if _cost(pert, 2, bundles[0]) > _cost(pert, 2, bundles[1]):
            bundles[0], bundles[1] = bundles[1], bundles[0]
            swapped = True
        _check_invariants(pert, bundles)
        phi = len(bundles[0]) + len(bundles[1])
        if previous_phi is not None and phi >= previous_phi:
            raise LoopInvariantError(f"potential stalled at {phi}")
        previous_phi = phi

        assignment = terminal_assignment(pert, bundles)
        if assignment is not None:
            trace.append({"iteration": iteration, "phi": phi, "branch": "terminal",
                          "swapped": swapped})
            by_agent = [bundles[assignment[a]] for a in range(3)]
            labels = [assignment[a] for a in range(3)]
            return _result(inst, by_agent, labels, "tEFX", trace, iteration + 1)

        # Only bundle 2 fits agent 2 now; move her least-cost chore over.
        mover = min(bundles[0], key=lambda c: (pert.d(2, c), c))
        slim = bundles[0] - {mover}
        grown = bundles[2] | {mover}
        if _cost(pert, 2, slim) <= _cost(pert, 2, grown):
            raise LoopInvariantError("moved chore failed to keep bundle 0 heavier")
        candidate = [slim, bundles[1], grown]
        if tefx_feasible(pert, 0, 1, candidate):
            trace.append({"iteration": iteration, "phi": phi, "branch": "move",
                          "moved": [mover], "swapped": swapped})
            bundles = candidate
            continue

        # Rebalance: shift the cheapest chores (agent 0's view) from bundle 1
        # to bundle 0 until the order flips on the next shift.
        order = sorted(candidate[1], key=lambda c: (pert.d(0, c), c))
        chosen = None
        for take in range(1, len(order)):
            one = candidate[0] | set(order[:take])
            two = candidate[1] - set(order[:take])
            if _cost(pert, 0, one) < _cost(pert, 0, two):
                nxt = order[take]
                if _cost(pert, 0, one) + pert.d(0, nxt) >= _cost(pert, 0, two) - pert.d(0, nxt):
                    chosen = (frozenset(one), frozenset(two), take)
                    break
        if chosen is None:
            raise LoopInvariantError("no valid transfer prefix: rebalancing failed")
        balanced = [chosen[0], chosen[1], candidate[2]]
        if tefx_feasible(pert, 2, 2, balanced):
            trace.append({"iteration": iteration, "phi": phi, "branch": "transfer",
                          "moved": [mover] + order[:chosen[2]], "swapped": swapped})
            bundles = balanced
            continue

        # Proportional exit: agent 1 takes her cheapest bundle; agents 0 and 2
        # take their proven-proportional bundles from the remainder.
        costs1 = [_cost(pert, 1, b) for b in balanced]
        favorite = min(range(3), key=lambda k: (costs1[k], k))
        if favorite == 0:
            labels = [1, 0, 2]
        elif favorite == 1:
            labels = [0, 1, 2]
        else:
            labels = [0, 2, 1]
        trace.append({"iteration": iteration, "phi": phi, "branch": "proportional",
                      "favorite": favorite, "swapped": swapped})
        by_agent = [balanced[labels[a]] for a in range(3)]
        return _result(inst, by_agent, labels, "Proportional", trace, iteration + 1)

    raise NonTerminationError(f"loop exceeded {m} iterations")
