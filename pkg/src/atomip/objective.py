"""Decoding, feasible-time sets and the two-part control objective.

The decoded value of a variable is the domain value of its manifold's
most-populated level. The control objective adds a feasibility-fraction
term and a feasible-cost-fraction term, each normalized into [0, 1]; both
vanish exactly when every sample is feasible, making 0 the target.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import backend
from .dynamics import Trajectory
from .encoding import LevelScheme
from .model import GE, CapExceededError, Polynomial, Problem

ZERO_COST_TOL = 1e-12
_INT64_GUARD = 2**62


@dataclass(frozen=True)
class ProblemTables:
    """Integer-scaled evaluation tables consumed by the kernels.

    Each polynomial is scaled by the lcm of its coefficient denominators so
    all per-sample arithmetic is exact int64. `cost_scale` converts the
    scaled cost back to problem units.
    """

    offsets: np.ndarray
    lows: np.ndarray
    cost_coeffs: np.ndarray
    cost_offs: np.ndarray
    cost_vars: np.ndarray
    cost_scale: int
    cons_poly_offs: np.ndarray
    cons_coeffs: np.ndarray
    cons_offs: np.ndarray
    cons_vars: np.ndarray
    cons_rhs: np.ndarray
    cons_sense: np.ndarray


def _scaled_terms(poly: Polynomial, extra: Fraction | None = None):
    scale = 1
    for term in poly.terms:
        scale = scale * term.coeff.denominator // math.gcd(scale, term.coeff.denominator)
    if extra is not None:
        scale = scale * extra.denominator // math.gcd(scale, extra.denominator)
    coeffs = [int(term.coeff * scale) for term in poly.terms]
    factors = [list(term.factors) for term in poly.terms]
    return scale, coeffs, factors


def _bound_check(coeffs, factors, problem: Problem) -> None:
    bound = 0
    for c, fs in zip(coeffs, factors):
        part = abs(c)
        for f in fs:
            var = problem.variables[f]
            part *= max(abs(var.lo), abs(var.hi), 1)
        bound += part
    if bound >= _INT64_GUARD:
        raise CapExceededError("coefficients too large for exact int64 evaluation")


def problem_tables(problem: Problem, scheme: LevelScheme) -> ProblemTables:
    cost_scale, cost_coeffs, cost_factors = _scaled_terms(problem.cost)
    _bound_check(cost_coeffs, cost_factors, problem)

    cons_poly_offs = [0]
    cons_coeffs: list[int] = []
    cons_factors: list[list[int]] = []
    cons_rhs: list[int] = []
    cons_sense: list[int] = []
    for c in problem.constraints:
        scale, coeffs, factors = _scaled_terms(c.lhs, extra=c.rhs)
        _bound_check(coeffs, factors, problem)
        cons_coeffs.extend(coeffs)
        cons_factors.extend(factors)
        cons_poly_offs.append(len(cons_coeffs))
        cons_rhs.append(int(c.rhs * scale))
        cons_sense.append(1 if c.sense == GE else 0)

    def flat(factor_lists):
        offs = [0]
        flat_vars: list[int] = []
        for fs in factor_lists:
            flat_vars.extend(fs)
            offs.append(len(flat_vars))
        return (
            np.asarray(offs, dtype=np.int64),
            np.asarray(flat_vars, dtype=np.int64),
        )

    cost_offs, cost_vars = flat(cost_factors)
    cons_offs, cons_vars = flat(cons_factors)
    return ProblemTables(
        offsets=np.asarray(scheme.offsets, dtype=np.int64),
        lows=np.asarray(scheme.lows, dtype=np.int64),
        cost_coeffs=np.asarray(cost_coeffs, dtype=np.int64),
        cost_offs=cost_offs,
        cost_vars=cost_vars,
        cost_scale=cost_scale,
        cons_poly_offs=np.asarray(cons_poly_offs, dtype=np.int64),
        cons_coeffs=np.asarray(cons_coeffs, dtype=np.int64),
        cons_offs=cons_offs,
        cons_vars=cons_vars,
        cons_rhs=np.asarray(cons_rhs, dtype=np.int64),
        cons_sense=np.asarray(cons_sense, dtype=np.int64),
    )


def decode(populations: np.ndarray, scheme: LevelScheme) -> tuple[int, ...]:
    """Decode a single population vector to one integer per variable."""
    pops = np.asarray(populations, dtype=np.float64)[None, :]
    row = backend.decode_populations(
        pops,
        np.asarray(scheme.offsets, dtype=np.int64),
        np.asarray(scheme.lows, dtype=np.int64),
    )[0]
    return tuple(int(v) for v in row)


@dataclass(frozen=True)
class DecodedSeries:
    times: np.ndarray        # (N,)
    assignments: np.ndarray  # (N, m) int64
    feasible: np.ndarray     # (N,) bool
    costs_scaled: np.ndarray  # (N,) int64
    cost_scale: int

    @property
    def n_samples(self) -> int:
        return len(self.times)

    @property
    def costs(self) -> np.ndarray:
        return self.costs_scaled / self.cost_scale

    def cost_at(self, k: int) -> Fraction:
        return Fraction(int(self.costs_scaled[k]), self.cost_scale)


def decode_series(trajectory: Trajectory, tables: ProblemTables) -> DecodedSeries:
    assignments = backend.decode_populations(
        trajectory.populations, tables.offsets, tables.lows
    )
    costs, feasible = backend.evaluate_assignments(
        assignments,
        tables.cost_coeffs,
        tables.cost_offs,
        tables.cost_vars,
        tables.cons_poly_offs,
        tables.cons_coeffs,
        tables.cons_offs,
        tables.cons_vars,
        tables.cons_rhs,
        tables.cons_sense,
    )
    return DecodedSeries(
        times=trajectory.times,
        assignments=assignments,
        feasible=np.asarray(feasible, dtype=bool),
        costs_scaled=costs,
        cost_scale=tables.cost_scale,
    )


def feasible_set(series: DecodedSeries, constraints) -> np.ndarray:
    """Indices of samples whose decoded assignment satisfies every constraint.

    Recomputed with exact rational arithmetic, independent of the kernel's
    feasibility flags (used to cross-check them).
    """
    if series.n_samples == 0:
        return np.zeros(0, dtype=np.int64)
    uniq, inverse = np.unique(series.assignments, axis=0, return_inverse=True)
    ok = np.array(
        [all(c.check(tuple(int(v) for v in row)) for c in constraints) for row in uniq],
        dtype=bool,
    )
    return np.flatnonzero(ok[inverse])


@dataclass(frozen=True)
class ObjectiveReport:
    o: float
    n_feasible: int
    n_samples: int
    feasible_indices: np.ndarray
    best_cost: Fraction | None
    best_assignment: tuple[int, ...] | None
    first_time: float | None


def objective_value(series: DecodedSeries, problem: Problem) -> ObjectiveReport:
    """Two-part objective plus the best feasible decoded cost in the series.

    O = (1 - feasible fraction) + (1 - feasible-cost fraction), the second
    term clamped to [0, 1] and defined as 1 when the total decoded cost is
    not positive. The reported best feasible cost is re-verified with exact
    arithmetic before it is returned.
    """
    n = series.n_samples
    feas = series.feasible
    n_feas = int(feas.sum())
    first = 1.0 - (n_feas / n if n else 0.0)
    denom = int(series.costs_scaled.sum())
    if denom / series.cost_scale <= ZERO_COST_TOL:
        second = 1.0
    else:
        numer = int(series.costs_scaled[feas].sum())
        second = min(max(1.0 - numer / denom, 0.0), 1.0)
    o = first + second

    best_cost = None
    best_assignment = None
    first_time = None
    idx = np.flatnonzero(feas)
    if idx.size:
        scaled = series.costs_scaled[idx]
        k = idx[int(np.argmax(scaled == scaled.max()))]
        best_cost = series.cost_at(int(k))
        best_assignment = tuple(int(v) for v in series.assignments[k])
        first_time = float(series.times[k])
        if not problem.is_feasible(best_assignment):
            raise RuntimeError("kernel feasibility flag disagrees with exact check")
        if problem.cost.evaluate(best_assignment) != best_cost:
            raise RuntimeError("kernel cost disagrees with exact evaluation")
    return ObjectiveReport(
        o=o,
        n_feasible=n_feas,
        n_samples=n,
        feasible_indices=idx,
        best_cost=best_cost,
        best_assignment=best_assignment,
        first_time=first_time,
    )
