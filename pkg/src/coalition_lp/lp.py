"""A small deterministic simplex solver.

Two-phase dense simplex with Bland's rule.  When every coefficient is an int
or Fraction the whole computation runs in exact rational arithmetic and the
reported optimum is exact; otherwise floats are used with a pivot tolerance
of 1e-9 and the optimal point is re-verified against every constraint to a
relative 1e-8 before being returned.

The problems solved here are tiny (tens of variables), so clarity and
reproducibility win over speed: no scaling, no revised simplex, no
presolve.  Identical inputs always take identical pivots.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from fractions import Fraction

PIVOT_TOL = 1e-9
FEAS_TOL = 1e-8
MAX_PIVOTS = 100_000

RELATIONS = ("<=", "=", ">=")


class DimensionMismatch(Exception):
    pass


class NumericalFailure(Exception):
    pass


class StatusMismatch(Exception):
    pass


class LpStatus(enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"


@dataclass(frozen=True)
class LinearProgram:
    """min or max of objective . x subject to rows, with x >= 0 implicit."""

    objective: tuple
    sense: str
    rows: tuple  # of (coeffs tuple, relation str, rhs)

    def __post_init__(self):
        if self.sense not in ("min", "max"):
            raise ValueError(f"sense must be 'min' or 'max', got {self.sense!r}")
        if len(self.objective) == 0:
            raise DimensionMismatch("objective must have at least one variable")
        for coeffs, rel, _rhs in self.rows:
            if len(coeffs) != len(self.objective):
                raise DimensionMismatch(
                    f"row has {len(coeffs)} coefficients, objective has {len(self.objective)}"
                )
            if rel not in RELATIONS:
                raise ValueError(f"relation must be one of {RELATIONS}, got {rel!r}")

    @property
    def n_vars(self) -> int:
        return len(self.objective)

    @property
    def is_rational(self) -> bool:
        values = list(self.objective)
        for coeffs, _rel, rhs in self.rows:
            values.extend(coeffs)
            values.append(rhs)
        return all(
            isinstance(v, (int, Fraction)) and not isinstance(v, bool) for v in values
        )


@dataclass(frozen=True)
class LpOutcome:
    status: LpStatus
    value: object  # Fraction or float; +-inf for non-optimal statuses
    point: tuple | None


def solve(lp: LinearProgram) -> LpOutcome:
    """Solve the program; see the module docstring for guarantees."""
    exact = lp.is_rational
    if exact:
        conv = Fraction
        tol = Fraction(0)
    else:
        conv = float
        tol = PIVOT_TOL

    minimize = lp.sense == "min"
    n = lp.n_vars
    cost = [conv(c) if minimize else -conv(c) for c in lp.objective]

    # Rows with non-negative rhs; remember columns as: original | slack/surplus | artificial.
    body = []
    rels = []
    rhs = []
    for coeffs, rel, b in lp.rows:
        coeffs = [conv(x) for x in coeffs]
        b = conv(b)
        if b < 0:
            coeffs = [-x for x in coeffs]
            b = -b
            rel = {"<=": ">=", ">=": "<=", "=": "="}[rel]
        body.append(coeffs)
        rels.append(rel)
        rhs.append(b)

    nrows = len(body)
    slack_of = [None] * nrows
    art_of = [None] * nrows
    ncols = n
    for i, rel in enumerate(rels):
        if rel in ("<=", ">="):
            slack_of[i] = ncols
            ncols += 1
    art_base = ncols
    for i, rel in enumerate(rels):
        if rel in (">=", "="):
            art_of[i] = ncols
            ncols += 1

    zero = conv(0)
    one = conv(1)
    tableau = []
    basis = []
    for i in range(nrows):
        row = body[i] + [zero] * (ncols - n) + [rhs[i]]
        if slack_of[i] is not None:
            row[slack_of[i]] = one if rels[i] == "<=" else -one
        if art_of[i] is not None:
            row[art_of[i]] = one
            basis.append(art_of[i])
        else:
            basis.append(slack_of[i])
        tableau.append(row)

    pivots_left = [MAX_PIVOTS]

    def run(cost_row, allowed):
        """Bland-rule iterations; returns 'optimal' or 'unbounded'."""
        while True:
            entering = -1
            for j in range(allowed):
                if j not in basis and cost_row[j] < -tol:
                    entering = j
                    break
            if entering < 0:
                return "optimal"
            leaving = -1
            best = None
            for i in range(nrows):
                a = tableau[i][entering]
                if a > tol:
                    ratio = tableau[i][-1] / a
                    if best is None or ratio < best or (
                        ratio == best and basis[i] < basis[leaving]
                    ):
                        best = ratio
                        leaving = i
            if leaving < 0:
                return "unbounded"
            pivots_left[0] -= 1
            if pivots_left[0] < 0:
                raise NumericalFailure("pivot budget exhausted; possible cycling")
            _pivot(tableau, cost_row, basis, leaving, entering, tol)

    # Phase 1: minimize the sum of artificials.
    if art_base < ncols:
        cost1 = [zero] * ncols + [zero]
        for j in range(art_base, ncols):
            cost1[j] = one
        for i in range(nrows):
            if basis[i] >= art_base:
                cost1 = [cj - ai for cj, ai in zip(cost1, tableau[i])]
        status = run(cost1, ncols)
        if status != "optimal":
            raise NumericalFailure("phase 1 reported unbounded")
        infeas = -cost1[-1]
        if infeas > (0 if exact else FEAS_TOL):
            return _non_optimal(LpStatus.INFEASIBLE, minimize)
        # Drive leftover artificials out of the basis; drop redundant rows.
        pivot_floor = 0 if exact else PIVOT_TOL
        for i in range(nrows - 1, -1, -1):
            if basis[i] >= art_base:
                entering = -1
                for j in range(art_base):
                    if abs(tableau[i][j]) > pivot_floor:
                        entering = j
                        break
                if entering >= 0:
                    _pivot(tableau, cost1, basis, i, entering, tol)
                else:
                    del tableau[i]
                    del basis[i]
                    nrows -= 1

    # Phase 2 over the original columns only.
    cost2 = [zero] * art_base + [zero]
    for j in range(n):
        cost2[j] = cost[j]
    for i in range(nrows):
        tableau[i] = tableau[i][:art_base] + [tableau[i][-1]]
        if cost2[basis[i]] != 0:
            coef = cost2[basis[i]]
            cost2 = [cj - coef * ai for cj, ai in zip(cost2, tableau[i])]
    status = run(cost2, art_base)
    if status == "unbounded":
        return _non_optimal(LpStatus.UNBOUNDED, minimize)

    point = [zero] * n
    for i in range(nrows):
        if basis[i] < n:
            point[basis[i]] = tableau[i][-1]
    value = sum(c * x for c, x in zip(cost, point))
    if not minimize:
        value = -value
    _verify_feasible(lp, point, exact)
    return LpOutcome(LpStatus.OPTIMAL, value, tuple(point))


def _pivot(tableau, cost_row, basis, leaving, entering, tol):
    piv = tableau[leaving][entering]
    inv = 1 / piv if isinstance(piv, Fraction) else 1.0 / piv
    tableau[leaving] = [x * inv for x in tableau[leaving]]
    prow = tableau[leaving]
    for i, row in enumerate(tableau):
        if i != leaving and row[entering] != 0:
            f = row[entering]
            tableau[i] = [x - f * p for x, p in zip(row, prow)]
    if cost_row[entering] != 0:
        f = cost_row[entering]
        for j in range(len(cost_row)):
            cost_row[j] -= f * prow[j]
    basis[leaving] = entering


def _non_optimal(status: LpStatus, minimize: bool) -> LpOutcome:
    if status is LpStatus.INFEASIBLE:
        value = math.inf if minimize else -math.inf
    else:
        value = -math.inf if minimize else math.inf
    return LpOutcome(status, value, None)


def _verify_feasible(lp: LinearProgram, point, exact: bool):
    """Re-check the reported point against every original constraint."""
    for coeffs, rel, b in lp.rows:
        lhs = sum(c * x for c, x in zip(coeffs, point))
        if exact:
            ok = (lhs <= b) if rel == "<=" else (lhs >= b) if rel == ">=" else lhs == b
        else:
            slack = FEAS_TOL * (1.0 + abs(float(b)))
            d = float(lhs) - float(b)
            ok = (d <= slack) if rel == "<=" else (d >= -slack) if rel == ">=" else abs(d) <= slack
        if not ok:
            raise NumericalFailure(f"optimal point violates {coeffs} {rel} {b}")
    for x in point:
        if (exact and x < 0) or (not exact and float(x) < -FEAS_TOL):
            raise NumericalFailure("optimal point has a negative coordinate")


def dual_gap_check(primal: LinearProgram, dual: LinearProgram):
    """Solve both programs and return |primal optimum - dual optimum|.

    A primal/dual pair may also legitimately land on (infeasible, unbounded)
    or (infeasible, infeasible); those count as gap 0.  Any pairing of an
    optimal program with a non-optimal one raises StatusMismatch, as does
    the impossible (unbounded, unbounded).
    """
    p = solve(primal)
    d = solve(dual)
    if p.status is LpStatus.OPTIMAL and d.status is LpStatus.OPTIMAL:
        return abs(p.value - d.value)
    if p.status is LpStatus.OPTIMAL or d.status is LpStatus.OPTIMAL:
        raise StatusMismatch(f"{p.status.value} paired with {d.status.value}")
    if p.status is LpStatus.UNBOUNDED and d.status is LpStatus.UNBOUNDED:
        raise StatusMismatch("both programs unbounded; not a valid dual pair")
    return 0
