"""Continuous relaxation over the domain box.

Linear instances get an exact two-phase primal simplex over `Fraction`
with Bland's rule, so values, points and (downstream) branch & bound node
counts are reproducible. Nonlinear instances get a multi-level refining
grid search that reports a certified-feasible lower bound, not a global
certificate.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping, Sequence

from .model import (
    LE,
    CapExceededError,
    Polynomial,
    Problem,
    classify,
)

Bounds = tuple[Fraction | None, Fraction | None]


class UnsupportedProblemError(ValueError):
    """Raised when an operation only defined for linear problems gets a nonlinear one."""


@dataclass(frozen=True)
class LpSolution:
    status: str  # optimal | infeasible | unbounded
    value: Fraction | None = None
    point: tuple[Fraction, ...] | None = None


def _effective_bounds(problem: Problem, extra_bounds: Mapping[int, Bounds] | None):
    los: list[Fraction] = []
    his: list[Fraction] = []
    for i, v in enumerate(problem.variables):
        lo, hi = Fraction(v.lo), Fraction(v.hi)
        if extra_bounds and i in extra_bounds:
            xlo, xhi = extra_bounds[i]
            if xlo is not None:
                lo = max(lo, Fraction(xlo))
            if xhi is not None:
                hi = min(hi, Fraction(xhi))
        los.append(lo)
        his.append(hi)
    return los, his


def _pivot(rows: list[list[Fraction]], obj: list[Fraction], r: int, c: int) -> None:
    piv = rows[r][c]
    rows[r] = [x / piv for x in rows[r]]
    for i, row in enumerate(rows):
        if i != r and row[c] != 0:
            f = row[c]
            rows[i] = [a - f * b for a, b in zip(row, rows[r])]
    if obj[c] != 0:
        f = obj[c]
        for j in range(len(obj)):
            obj[j] -= f * rows[r][j]


def _run_simplex(
    rows: list[list[Fraction]],
    obj: list[Fraction],
    basis: list[int],
    allowed: Sequence[bool],
) -> str:
    """Primal simplex with Bland's rule on a tableau in canonical form.

    `obj[j]` holds z_j - c_j (maximization: optimal when all >= 0);
    `obj[-1]` the current objective value. Returns 'optimal' or 'unbounded'.
    """
    ncols = len(obj) - 1
    while True:
        enter = -1
        for j in range(ncols):
            if allowed[j] and obj[j] < 0:
                enter = j
                break
        if enter < 0:
            return "optimal"
        leave = -1
        best_ratio: Fraction | None = None
        for i, row in enumerate(rows):
            if row[enter] > 0:
                ratio = row[-1] / row[enter]
                if best_ratio is None or ratio < best_ratio or (
                    ratio == best_ratio and basis[i] < basis[leave]
                ):
                    best_ratio = ratio
                    leave = i
        if leave < 0:
            return "unbounded"
        _pivot(rows, obj, leave, enter)
        basis[leave] = enter


def _objective_row(costs: list[Fraction], rows, basis, ncols) -> list[Fraction]:
    obj = [-costs[j] for j in range(ncols)] + [Fraction(0)]
    for i, b in enumerate(basis):
        cb = costs[b]
        if cb != 0:
            for j in range(ncols + 1):
                obj[j] += cb * rows[i][j]
    return obj


def solve_lp_relaxation(
    problem: Problem,
    extra_bounds: Mapping[int, Bounds] | None = None,
) -> LpSolution:
    """Exact simplex optimum of the cost over box * constraints.

    Box bounds come from the variable domains, tightened by `extra_bounds`
    (used by branch & bound); tightening never increases the value.
    """
    if classify(problem) != "linear":
        raise UnsupportedProblemError("LP relaxation requires a linear problem")
    n = problem.n_vars
    los, his = _effective_bounds(problem, extra_bounds)
    if any(lo > hi for lo, hi in zip(los, his)):
        return LpSolution("infeasible")

    cost_coeffs, cost_const = problem.cost.linear_parts(n)
    offset = cost_const + sum(c * lo for c, lo in zip(cost_coeffs, los))

    # Shifted variables y = x - lo >= 0; all constraints in <= form.
    le_rows: list[tuple[list[Fraction], Fraction]] = []
    for c in problem.constraints:
        coeffs, const = c.lhs.linear_parts(n)
        rhs = c.rhs - const - sum(a * lo for a, lo in zip(coeffs, los))
        if c.sense == LE:
            le_rows.append((coeffs[:], rhs))
        else:
            le_rows.append(([-a for a in coeffs], -rhs))
    for i in range(n):
        bound_row = [Fraction(0)] * n
        bound_row[i] = Fraction(1)
        le_rows.append((bound_row, his[i] - los[i]))

    m = len(le_rows)
    n_art = sum(1 for _, rhs in le_rows if rhs < 0)
    ncols = n + m + n_art
    rows: list[list[Fraction]] = []
    basis: list[int] = []
    art_cols: list[int] = []
    next_art = n + m
    for i, (coeffs, rhs) in enumerate(le_rows):
        row = [Fraction(0)] * (ncols + 1)
        sign = 1 if rhs >= 0 else -1
        for j, a in enumerate(coeffs):
            row[j] = sign * a
        row[n + i] = Fraction(sign)
        row[-1] = sign * rhs
        if sign < 0:
            row[next_art] = Fraction(1)
            basis.append(next_art)
            art_cols.append(next_art)
            next_art += 1
        else:
            basis.append(n + i)
        rows.append(row)

    allowed = [True] * ncols
    if art_cols:
        # Phase 1: maximize -sum(artificials); feasible iff the optimum is 0.
        phase1 = [Fraction(0)] * ncols
        for j in art_cols:
            phase1[j] = Fraction(-1)
        obj = _objective_row(phase1, rows, basis, ncols)
        status = _run_simplex(rows, obj, basis, allowed)
        if status != "optimal" or obj[-1] != 0:
            return LpSolution("infeasible")
        for i, b in enumerate(basis):
            if b in art_cols:
                # Degenerate artificial in the basis: pivot it out if possible.
                for j in range(n + m):
                    if rows[i][j] != 0:
                        _pivot(rows, obj, i, j)
                        basis[i] = j
                        break
        for j in art_cols:
            allowed[j] = False

    costs = [Fraction(0)] * ncols
    for j in range(n):
        costs[j] = cost_coeffs[j]
    obj = _objective_row(costs, rows, basis, ncols)
    status = _run_simplex(rows, obj, basis, allowed)
    if status == "unbounded":
        return LpSolution("unbounded")
    point_y = [Fraction(0)] * n
    for i, b in enumerate(basis):
        if b < n:
            point_y[b] = rows[i][-1]
    point = tuple(y + lo for y, lo in zip(point_y, los))
    return LpSolution("optimal", obj[-1] + offset, point)


@dataclass(frozen=True)
class GridResult:
    feasible: bool
    value: Fraction | None
    point: tuple[Fraction, ...] | None
    final_step: Fraction


def _axis_points(lo: Fraction, hi: Fraction, step: Fraction) -> list[Fraction]:
    points = []
    v = lo
    while v < hi:
        points.append(v)
        v += step
    points.append(hi)
    return points


def solve_relaxation_grid(
    problem: Problem,
    step: Fraction = Fraction(1, 10),
    refinements: int = 3,
    factor: int = 10,
    max_vars: int = 6,
) -> GridResult:
    """Feasible-grid lower bound on the continuous optimum.

    Scans the box at `step`, then refines `refinements` times around the
    incumbent, shrinking the step by `factor` each level. Exact rational
    arithmetic throughout; ties go to the lexicographically smallest point,
    so the result is independent of evaluation order.
    """
    n = problem.n_vars
    if n > max_vars:
        raise CapExceededError(f"{n} variables exceed grid search cap {max_vars}")
    los = [Fraction(v.lo) for v in problem.variables]
    his = [Fraction(v.hi) for v in problem.variables]

    best_value: Fraction | None = None
    best_point: tuple[Fraction, ...] | None = None

    def scan(axes: list[list[Fraction]]) -> None:
        nonlocal best_value, best_point
        for point in itertools.product(*axes):
            if not all(c.check(point) for c in problem.constraints):
                continue
            value = problem.cost.evaluate(point)
            if best_value is None or value > best_value or (
                value == best_value and point < best_point
            ):
                best_value = value
                best_point = point

    scan([_axis_points(lo, hi, step) for lo, hi in zip(los, his)])
    if best_value is None:
        return GridResult(False, None, None, step)
    for _ in range(refinements):
        window = step
        step = step / factor
        axes = [
            _axis_points(max(lo, p - window), min(hi, p + window), step)
            for lo, hi, p in zip(los, his, best_point)
        ]
        scan(axes)
    return GridResult(True, best_value, best_point, step)


def continuous_optimum(problem: Problem) -> tuple[Fraction, str]:
    """Best available continuous-relaxation value and how it was obtained.

    Linear problems use the exact simplex ('simplex'); nonlinear ones the
    grid search ('grid', a lower bound rather than a certificate).
    """
    if classify(problem) == "linear":
        sol = solve_lp_relaxation(problem)
        if sol.status != "optimal":
            raise UnsupportedProblemError(f"relaxation is {sol.status}")
        return sol.value, "simplex"
    res = solve_relaxation_grid(problem)
    if not res.feasible:
        raise UnsupportedProblemError("no feasible grid point at initial resolution")
    return res.value, "grid"


def lipschitz_bound(poly: Polynomial, problem: Problem) -> Fraction:
    """Sum over variables of a bound on |d poly / d x_v| over the box."""
    bound = Fraction(0)
    for v in range(problem.n_vars):
        for term in poly.terms:
            mult = term.factors.count(v)
            if mult == 0:
                continue
            part = abs(term.coeff) * mult
            others = list(term.factors)
            others.remove(v)
            for o in others:
                var = problem.variables[o]
                part *= max(abs(Fraction(var.lo)), abs(Fraction(var.hi)))
            bound += part
    return bound
