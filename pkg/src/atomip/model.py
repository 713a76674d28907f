"""Integer-program instances over exact rationals.

Everything in this module is exact: coefficients, bounds and all derived
values are `fractions.Fraction`, so the brute-force oracle, the hardness
metrics and the branch & bound bounds are reproducible bit-for-bit.
Floating point only enters the picture in the dynamics/optimization layers.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

RationalLike = Fraction | int | str

DEFAULT_ENUMERATION_CAP = 10**7


class EvaluationError(ValueError):
    """A polynomial referenced a variable index with no assigned value."""


class CapExceededError(RuntimeError):
    """An enumeration would exceed the configured assignment cap."""


def _as_fraction(value: RationalLike) -> Fraction:
    if isinstance(value, Fraction):
        return value
    return Fraction(value)


@dataclass(frozen=True)
class Monomial:
    """One product term: coefficient times a multiset of variables.

    `factors` holds variable indices, sorted, with repeats meaning powers;
    an empty tuple is a constant term.
    """

    coeff: Fraction
    factors: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "coeff", _as_fraction(self.coeff))
        object.__setattr__(self, "factors", tuple(sorted(self.factors)))

    @property
    def degree(self) -> int:
        return len(self.factors)

    def evaluate(self, assignment: Sequence[RationalLike]) -> Fraction:
        value = self.coeff
        for idx in self.factors:
            if idx < 0 or idx >= len(assignment) or assignment[idx] is None:
                raise EvaluationError(f"variable index {idx} is unassigned")
            value *= _as_fraction(assignment[idx])
        return value


@dataclass(frozen=True)
class Polynomial:
    """Sum of monomials, kept in canonical form.

    Canonical means: terms with identical factor multisets are merged,
    zero-coefficient terms dropped, terms sorted by (degree, factors).
    """

    terms: tuple[Monomial, ...] = ()

    def __post_init__(self):
        merged: dict[tuple[int, ...], Fraction] = {}
        for term in self.terms:
            merged[term.factors] = merged.get(term.factors, Fraction(0)) + term.coeff
        canonical = tuple(
            Monomial(coeff, factors)
            for factors, coeff in sorted(merged.items(), key=lambda kv: (len(kv[0]), kv[0]))
            if coeff != 0
        )
        object.__setattr__(self, "terms", canonical)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[RationalLike, Sequence[int]]]) -> "Polynomial":
        return cls(tuple(Monomial(_as_fraction(c), tuple(f)) for c, f in pairs))

    @classmethod
    def constant(cls, value: RationalLike) -> "Polynomial":
        return cls((Monomial(_as_fraction(value)),))

    def evaluate(self, assignment: Sequence[RationalLike]) -> Fraction:
        return sum((t.evaluate(assignment) for t in self.terms), Fraction(0))

    def scaled(self, k: RationalLike) -> "Polynomial":
        k = _as_fraction(k)
        return Polynomial(tuple(Monomial(t.coeff * k, t.factors) for t in self.terms))

    def variables(self) -> set[int]:
        return {idx for t in self.terms for idx in t.factors}

    @property
    def degree(self) -> int:
        return max((t.degree for t in self.terms), default=0)

    def is_linear(self) -> bool:
        return all(t.degree <= 1 for t in self.terms)

    def linear_parts(self, n_vars: int) -> tuple[list[Fraction], Fraction]:
        """Return (coefficient vector, constant) for a linear polynomial."""
        if not self.is_linear():
            raise ValueError("polynomial is not linear")
        coeffs = [Fraction(0)] * n_vars
        const = Fraction(0)
        for term in self.terms:
            if term.factors:
                coeffs[term.factors[0]] += term.coeff
            else:
                const += term.coeff
        return coeffs, const


LE = "<="
GE = ">="


@dataclass(frozen=True)
class Constraint:
    """Inequality lhs <= rhs or lhs >= rhs with a polynomial left side."""

    name: str
    lhs: Polynomial
    sense: str
    rhs: Fraction

    def __post_init__(self):
        if self.sense not in (LE, GE):
            raise ValueError(f"sense must be {LE!r} or {GE!r}, got {self.sense!r}")
        if not self.lhs.terms:
            raise ValueError("constraint left side is empty")
        object.__setattr__(self, "rhs", _as_fraction(self.rhs))

    def check(self, assignment: Sequence[RationalLike]) -> bool:
        value = self.lhs.evaluate(assignment)
        return value <= self.rhs if self.sense == LE else value >= self.rhs


@dataclass(frozen=True)
class Variable:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo > self.hi:
            raise ValueError(f"variable {self.name}: empty domain {self.lo}..{self.hi}")

    @property
    def size(self) -> int:
        return self.hi - self.lo + 1

    def values(self) -> range:
        return range(self.lo, self.hi + 1)


@dataclass(frozen=True)
class Problem:
    """A maximization instance: integer box domains, polynomial cost and constraints."""

    variables: tuple[Variable, ...]
    cost: Polynomial
    constraints: tuple[Constraint, ...] = ()

    def __post_init__(self):
        names = [v.name for v in self.variables]
        if len(set(names)) != len(names):
            raise ValueError("duplicate variable names")
        n = len(self.variables)
        for poly in [self.cost] + [c.lhs for c in self.constraints]:
            for idx in poly.variables():
                if idx < 0 or idx >= n:
                    raise ValueError(f"undeclared variable index {idx}")

    @property
    def n_vars(self) -> int:
        return len(self.variables)

    def domain_product(self) -> int:
        size = 1
        for v in self.variables:
            size *= v.size
        return size

    def is_feasible(self, assignment: Sequence[int]) -> bool:
        return all(c.check(assignment) for c in self.constraints)


def evaluate_polynomial(poly: Polynomial, assignment: Sequence[RationalLike]) -> Fraction:
    return poly.evaluate(assignment)


def check_constraint(constraint: Constraint, assignment: Sequence[RationalLike]) -> bool:
    return constraint.check(assignment)


def classify(problem: Problem) -> str:
    """'linear' iff every monomial in cost and constraints has degree <= 1."""
    polys = [problem.cost] + [c.lhs for c in problem.constraints]
    return "linear" if all(p.is_linear() for p in polys) else "nonlinear"


@dataclass(frozen=True)
class BruteForceResult:
    feasible: bool
    value: Fraction | None
    argmax: tuple[tuple[int, ...], ...]

    def __bool__(self) -> bool:
        return self.feasible


def brute_force_optimum(problem: Problem, cap: int = DEFAULT_ENUMERATION_CAP) -> BruteForceResult:
    """Exact optimum by full enumeration; collects every attaining assignment."""
    total = problem.domain_product()
    if total > cap:
        raise CapExceededError(f"{total} assignments exceed cap {cap}")
    best: Fraction | None = None
    argmax: list[tuple[int, ...]] = []
    for point in itertools.product(*(v.values() for v in problem.variables)):
        if not problem.is_feasible(point):
            continue
        value = problem.cost.evaluate(point)
        if best is None or value > best:
            best = value
            argmax = [point]
        elif value == best:
            argmax.append(point)
    if best is None:
        return BruteForceResult(False, None, ())
    return BruteForceResult(True, best, tuple(argmax))


@dataclass(frozen=True)
class Metrics:
    """Instance-hardness metrics: relaxation gap, nonlinearity, discrete density."""

    b1: Fraction
    b2: Fraction
    b3: Fraction
    v_int: Fraction
    v_cont: Fraction
    n_tot: int
    n_int: int
    n_bin: int

    def __post_init__(self):
        if self.b1 < 0 or not (0 <= self.b2 <= 100) or not (0 <= self.b3 <= 100):
            raise ValueError("metrics out of range")


def metric_b1(v_int: RationalLike, v_cont: RationalLike) -> Fraction:
    """Relative continuous relaxation gap, in percent."""
    v_int = _as_fraction(v_int)
    v_cont = _as_fraction(v_cont)
    return abs(v_int - v_cont) / max(abs(v_int), Fraction(1, 1000)) * 100


def nonlinear_variables(problem: Problem) -> set[int]:
    """Distinct variables appearing in any monomial of total degree >= 2."""
    found: set[int] = set()
    for poly in [problem.cost] + [c.lhs for c in problem.constraints]:
        for term in poly.terms:
            if term.degree >= 2:
                found.update(term.factors)
    return found


def metric_b2(problem: Problem) -> Fraction:
    """Degree of nonlinearity, in percent. A variable in several nonlinear
    terms counts once."""
    if problem.n_vars == 0:
        return Fraction(0)
    return Fraction(len(nonlinear_variables(problem)), problem.n_vars) * 100


def metric_b3(problem: Problem) -> Fraction:
    """Discrete density, in percent. All variables here are discrete, so the
    value is always 100; binary {0,1} domains are counted in n_bin and the
    rest in n_int (disjointly, keeping the percentage within 0..100)."""
    if problem.n_vars == 0:
        return Fraction(0)
    n_bin = count_binary(problem)
    n_int = problem.n_vars - n_bin
    return Fraction(n_int + n_bin, problem.n_vars) * 100


def count_binary(problem: Problem) -> int:
    return sum(1 for v in problem.variables if (v.lo, v.hi) == (0, 1))


def build_metrics(problem: Problem, v_int: RationalLike, v_cont: RationalLike) -> Metrics:
    n_bin = count_binary(problem)
    return Metrics(
        b1=metric_b1(v_int, v_cont),
        b2=metric_b2(problem),
        b3=metric_b3(problem),
        v_int=_as_fraction(v_int),
        v_cont=_as_fraction(v_cont),
        n_tot=problem.n_vars,
        n_int=problem.n_vars - n_bin,
        n_bin=n_bin,
    )
