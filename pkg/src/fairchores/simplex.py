"""Two-phase primal simplex over exact rationals.

Dense tableau with Bland's rule, so it cannot cycle and gives bit-identical
results on every run. Problem sizes here are tiny (tens of variables), which
a dense exact tableau handles comfortably.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from .errors import InputError

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LpResult:
    status: str
    objective: Optional[Fraction]
    solution: Optional[tuple[Fraction, ...]]


def solve_lp(cost, a_eq=None, b_eq=None, a_ub=None, b_ub=None) -> LpResult:
    """Minimize ``cost @ x`` subject to ``a_eq @ x == b_eq``, ``a_ub @ x <= b_ub``, ``x >= 0``.

    All data must be Fractions (or ints); the optimum and solution come back
    exact.
    """
    cost = [Fraction(v) for v in cost]
    n = len(cost)
    rows: list[list[Fraction]] = []
    rhs: list[Fraction] = []
    slack_count = 0
    if a_ub:
        slack_count = len(a_ub)
    for idx, row in enumerate(a_ub or []):
        if len(row) != n:
            raise InputError("inequality row width mismatch")
        slack = [Fraction(0)] * slack_count
        slack[idx] = Fraction(1)
        rows.append([Fraction(v) for v in row] + slack)
        rhs.append(Fraction(b_ub[idx]))
    for idx, row in enumerate(a_eq or []):
        if len(row) != n:
            raise InputError("equality row width mismatch")
        rows.append([Fraction(v) for v in row] + [Fraction(0)] * slack_count)
        rhs.append(Fraction(b_eq[idx]))

    total_vars = n + slack_count
    m_rows = len(rows)
    for r in range(m_rows):
        if rhs[r] < 0:
            rows[r] = [-v for v in rows[r]]
            rhs[r] = -rhs[r]

    # Tableau layout: columns are [structural + slack | artificial | rhs].
    tableau = [rows[r] + [Fraction(0)] * m_rows + [rhs[r]] for r in range(m_rows)]
    for r in range(m_rows):
        tableau[r][total_vars + r] = Fraction(1)
    basis = [total_vars + r for r in range(m_rows)]
    width = total_vars + m_rows + 1

    def pivot(row: int, col: int) -> None:
        factor = tableau[row][col]
        tableau[row] = [v / factor for v in tableau[row]]
        for r in range(m_rows):
            if r != row and tableau[r][col] != 0:
                coeff = tableau[r][col]
                base = tableau[row]
                tableau[r] = [v - coeff * base[k] for k, v in enumerate(tableau[r])]
        basis[row] = col

    def run_phase(objective: list[Fraction]) -> str:
        # Reduced costs maintained in a dedicated row: z = objective restated
        # over the current basis.
        z = objective[:]
        obj_value = Fraction(0)
        for r in range(m_rows):
            col = basis[r]
            if z[col] != 0:
                coeff = z[col]
                row = tableau[r]
                for k in range(width - 1):
                    z[k] -= coeff * row[k]
                obj_value -= coeff * row[width - 1]
        while True:
            entering = -1
            for col in range(width - 1):
                if z[col] < 0:
                    entering = col
                    break
            if entering < 0:
                return OPTIMAL
            leaving = -1
            best: Optional[Fraction] = None
            for r in range(m_rows):
                coeff = tableau[r][entering]
                if coeff > 0:
                    ratio = tableau[r][width - 1] / coeff
                    if best is None or ratio < best or (ratio == best and basis[r] < basis[leaving]):
                        best, leaving = ratio, r
            if leaving < 0:
                return UNBOUNDED
            pivot(leaving, entering)
            coeff = z[entering]
            row = tableau[leaving]
            for k in range(width - 1):
                z[k] -= coeff * row[k]

    # Phase 1: drive the artificial variables to zero.
    phase1_cost = [Fraction(0)] * total_vars + [Fraction(1)] * m_rows + [Fraction(0)]
    run_phase(phase1_cost)
    infeasibility = sum((tableau[r][width - 1] for r in range(m_rows) if basis[r] >= total_vars),
                        Fraction(0))
    if infeasibility != 0:
        return LpResult(INFEASIBLE, None, None)
    # Pivot lingering zero-valued artificials out of the basis where possible.
    for r in range(m_rows):
        if basis[r] >= total_vars:
            for col in range(total_vars):
                if tableau[r][col] != 0:
                    pivot(r, col)
                    break

    phase2_cost = cost + [Fraction(0)] * slack_count + [Fraction(0)] * m_rows + [Fraction(0)]
    # Forbid re-entering artificial columns.
    for r in range(m_rows):
        for col in range(total_vars, total_vars + m_rows):
            tableau[r][col] = Fraction(0)
    status = run_phase(phase2_cost)
    if status == UNBOUNDED:
        return LpResult(UNBOUNDED, None, None)

    solution = [Fraction(0)] * n
    for r in range(m_rows):
        if basis[r] < n:
            solution[basis[r]] = tableau[r][width - 1]
    objective = sum((cost[j] * solution[j] for j in range(n)), Fraction(0))
    return LpResult(OPTIMAL, objective, tuple(solution))
