"""Map a problem onto the levels of a single multi-level system.

Each variable gets one manifold of levels, one level per domain value.
Each constraint gets a coupling template: internal slots tie together the
levels of one manifold whose values the constraint can still tolerate,
external slots tie levels of different manifolds to correlate variables.
Values a variable can never take under a constraint (no completion of the
other variables satisfies it) are left out of that constraint's template
entirely.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

from .model import LE, CapExceededError, Constraint, Problem

INTERNAL = "internal"
EXTERNAL = "external"


class ConstraintUnsatisfiableError(ValueError):
    """Every value of some variable is ruled out by a single constraint."""


@dataclass(frozen=True)
class LevelScheme:
    """Level layout: per-variable manifolds flattened in declaration order."""

    sizes: tuple[int, ...]
    lows: tuple[int, ...]
    names: tuple[str, ...]

    @property
    def n_manifolds(self) -> int:
        return len(self.sizes)

    @property
    def dimension(self) -> int:
        return sum(self.sizes)

    @property
    def offsets(self) -> tuple[int, ...]:
        out = [0]
        for s in self.sizes:
            out.append(out[-1] + s)
        return tuple(out)

    def index(self, manifold: int, level: int) -> int:
        if not 0 <= level < self.sizes[manifold]:
            raise IndexError(f"manifold {manifold} has no level {level}")
        return self.offsets[manifold] + level

    def value(self, manifold: int, level: int) -> int:
        return self.lows[manifold] + level

    def level_of_value(self, manifold: int, value: int) -> int:
        level = value - self.lows[manifold]
        if not 0 <= level < self.sizes[manifold]:
            raise IndexError(f"value {value} outside manifold {manifold}")
        return level


def build_level_scheme(problem: Problem) -> LevelScheme:
    return LevelScheme(
        sizes=tuple(v.size for v in problem.variables),
        lows=tuple(v.lo for v in problem.variables),
        names=tuple(v.name for v in problem.variables),
    )


@dataclass(frozen=True)
class CouplingSlot:
    """One Hermitian coupling between two levels.

    Internal slots stay within a manifold (var_a == var_b, level_a < level_b);
    external slots join two manifolds (var_a < var_b).
    """

    kind: str
    var_a: int
    level_a: int
    var_b: int
    level_b: int

    def __post_init__(self):
        if self.kind == INTERNAL:
            if self.var_a != self.var_b or self.level_a >= self.level_b:
                raise ValueError("internal slot needs one manifold and ordered levels")
        elif self.kind == EXTERNAL:
            if self.var_a >= self.var_b:
                raise ValueError("external slot needs two distinct, ordered manifolds")
        else:
            raise ValueError(f"unknown slot kind {self.kind!r}")

    def label(self, scheme: LevelScheme) -> str:
        a = f"{scheme.names[self.var_a]}:{self.level_a}"
        b = f"{scheme.names[self.var_b]}:{self.level_b}"
        return f"{a}~{b}" if self.kind == EXTERNAL else f"{a}-{b}"


@dataclass(frozen=True)
class HamiltonianTemplate:
    constraint_index: int
    slots: tuple[CouplingSlot, ...]

    def __post_init__(self):
        if len(set(self.slots)) != len(self.slots):
            raise ValueError("duplicate coupling slots")

    @property
    def n_slots(self) -> int:
        return len(self.slots)


STAR = "star"
CHAIN = "chain"
DIAGONAL_CHAIN = "diagonal-chain"
EXPLICIT = "explicit"


@dataclass(frozen=True)
class CouplingPolicy:
    """How templates pick their slots.

    The defaults reproduce the worked three-variable example: internal
    couplings fan out from the lowest allowed level, and one external slot
    joins each consecutive pair of the constraint's variables, attaching at
    level min(variable index, highest allowed level) of each side.
    """

    internal_topology: str = STAR
    external_rule: str = DIAGONAL_CHAIN
    # (constraint index, var_a, level_a, var_b, level_b) entries, used when
    # external_rule == EXPLICIT.
    explicit_external: tuple[tuple[int, int, int, int, int], ...] = ()

    def __post_init__(self):
        if self.internal_topology not in (STAR, CHAIN):
            raise ValueError(f"unknown internal topology {self.internal_topology!r}")
        if self.external_rule not in (DIAGONAL_CHAIN, EXPLICIT):
            raise ValueError(f"unknown external rule {self.external_rule!r}")


def singly_infeasible_values(
    constraint: Constraint,
    var: int,
    problem: Problem,
    cap: int = 10**6,
) -> set[int]:
    """Values of `var` that no completion of the other variables can rescue.

    Linear constraints are decided by extremal evaluation per variable;
    nonlinear ones by enumerating the constraint's own variables.
    """
    involved = sorted(constraint.lhs.variables())
    if var not in involved:
        raise ValueError(f"variable {var} does not appear in constraint {constraint.name}")
    domain = problem.variables[var].values()

    if constraint.lhs.is_linear():
        coeffs, const = constraint.lhs.linear_parts(problem.n_vars)
        slack = const
        for j in involved:
            if j == var:
                continue
            v = problem.variables[j]
            lo_c, hi_c = coeffs[j] * v.lo, coeffs[j] * v.hi
            # Pick the completion that makes satisfaction easiest.
            slack += min(lo_c, hi_c) if constraint.sense == LE else max(lo_c, hi_c)
        bad = set()
        for w in domain:
            value = slack + coeffs[var] * w
            ok = value <= constraint.rhs if constraint.sense == LE else value >= constraint.rhs
            if not ok:
                bad.add(w)
        return bad

    others = [j for j in involved if j != var]
    total = 1
    for j in others:
        total *= problem.variables[j].size
    if total * len(domain) > cap:
        raise CapExceededError(f"nonlinear exclusion check needs {total * len(domain)} evaluations")
    assignment: list[int | None] = [0] * problem.n_vars
    bad = set()
    for w in domain:
        assignment[var] = w
        satisfiable = False
        for completion in itertools.product(*(problem.variables[j].values() for j in others)):
            for j, val in zip(others, completion):
                assignment[j] = val
            if constraint.check(assignment):
                satisfiable = True
                break
        if not satisfiable:
            bad.add(w)
    return bad


def _nearest_allowed(level: int, allowed: list[int]) -> int:
    below = [k for k in allowed if k <= level]
    if below:
        return max(below)
    return min(k for k in allowed if k > level)


def build_constraint_template(
    constraint: Constraint,
    constraint_index: int,
    scheme: LevelScheme,
    problem: Problem,
    policy: CouplingPolicy = CouplingPolicy(),
) -> HamiltonianTemplate:
    involved = sorted(constraint.lhs.variables())
    allowed_levels: dict[int, list[int]] = {}
    for var in involved:
        bad = singly_infeasible_values(constraint, var, problem)
        allowed = [
            k for k in range(scheme.sizes[var]) if scheme.value(var, k) not in bad
        ]
        if not allowed:
            raise ConstraintUnsatisfiableError(
                f"constraint {constraint.name}: no value of {scheme.names[var]} can satisfy it"
            )
        allowed_levels[var] = allowed

    slots: list[CouplingSlot] = []
    for var in involved:
        allowed = allowed_levels[var]
        if policy.internal_topology == STAR:
            center = allowed[0]
            slots.extend(
                CouplingSlot(INTERNAL, var, center, var, k) for k in allowed[1:]
            )
        else:
            slots.extend(
                CouplingSlot(INTERNAL, var, a, var, b)
                for a, b in zip(allowed, allowed[1:])
            )

    if policy.external_rule == EXPLICIT:
        for ci, va, la, vb, lb in policy.explicit_external:
            if ci == constraint_index:
                slots.append(CouplingSlot(EXTERNAL, va, la, vb, lb))
    else:
        for a, b in zip(involved, involved[1:]):
            slots.append(
                CouplingSlot(
                    EXTERNAL,
                    a,
                    _attach_level(a, allowed_levels[a]),
                    b,
                    _attach_level(b, allowed_levels[b]),
                )
            )
    return HamiltonianTemplate(constraint_index, tuple(slots))


def _attach_level(var: int, allowed: list[int]) -> int:
    # Attachment at min(variable index, top allowed level) reproduces the
    # worked example's two coupling Hamiltonians; off-template levels fall
    # back to the nearest allowed one (lower preferred).
    want = min(var, allowed[-1])
    return _nearest_allowed(want, allowed)


def build_templates(
    problem: Problem,
    scheme: LevelScheme,
    policy: CouplingPolicy = CouplingPolicy(),
) -> tuple[HamiltonianTemplate, ...]:
    return tuple(
        build_constraint_template(c, i, scheme, problem, policy)
        for i, c in enumerate(problem.constraints)
    )
