"""Protocol-parameter search: simplex descent plus quasi-Newton polish.

The control objective is piecewise constant in the parameters (decoded
integers jump at population crossings), so the derivative-free simplex
stage does the real work and the finite-difference BFGS polish only runs
when the local gradient estimate is nonzero. Restarts draw independent
seeded starting points; the best feasible decoded cost is tracked across
every evaluated point, not just the objective winner.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .dynamics import (
    DEFAULT_DT,
    DEFAULT_REPORT_DT,
    OMEGA_BOUNDS,
    TAU_BOUNDS,
    ProtocolParams,
    initial_state,
    run_protocol,
)
from .encoding import (
    DIAGONAL_CHAIN,
    STAR,
    CouplingPolicy,
    HamiltonianTemplate,
    LevelScheme,
)
from .model import Problem
from .objective import decode_series, objective_value, problem_tables


class OptimizerAbort(RuntimeError):
    """The objective returned a non-finite value."""


@dataclass(frozen=True)
class SearchResult:
    x: np.ndarray
    fun: float
    n_evals: int
    status: str


def _project(x, lower, upper):
    return np.minimum(np.maximum(x, lower), upper)


def nelder_mead(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_evals: int = 2000,
    diameter_tol: float = 1e-3,
    initial_step: float = 0.05,
) -> SearchResult:
    """Reflection/expansion/contraction/shrink search with box projection.

    Terminates when the simplex diameter (max infinity-distance to the best
    vertex) drops below `diameter_tol` or the evaluation budget runs out.
    A zero budget returns x0 unevaluated.
    """
    x0 = _project(np.asarray(x0, dtype=float), lower, upper)
    n = len(x0)
    if max_evals <= 0:
        return SearchResult(x0, float("inf"), 0, "empty-budget")

    evals = 0

    def call(x):
        nonlocal evals
        evals += 1
        value = f(x)
        if not np.isfinite(value):
            raise OptimizerAbort(f"non-finite objective at {x!r}")
        return value

    span = upper - lower
    simplex = [x0]
    for i in range(n):
        v = x0.copy()
        step = initial_step * span[i]
        v[i] = v[i] + step if v[i] + step <= upper[i] else v[i] - step
        simplex.append(_project(v, lower, upper))
    values = []
    for v in simplex:
        if evals >= max_evals:
            values.append(float("inf"))
        else:
            values.append(call(v))

    alpha, gamma, rho, sigma = 1.0, 2.0, 0.5, 0.5
    while evals < max_evals:
        order = np.argsort(values, kind="stable")
        simplex = [simplex[i] for i in order]
        values = [values[i] for i in order]
        diameter = max(np.max(np.abs(v - simplex[0])) for v in simplex[1:])
        if diameter < diameter_tol:
            return SearchResult(simplex[0], values[0], evals, "converged")

        centroid = np.mean(simplex[:-1], axis=0)
        reflected = _project(centroid + alpha * (centroid - simplex[-1]), lower, upper)
        fr = call(reflected)
        if values[0] <= fr < values[-2]:
            simplex[-1], values[-1] = reflected, fr
            continue
        if fr < values[0]:
            if evals >= max_evals:
                simplex[-1], values[-1] = reflected, fr
                break
            expanded = _project(centroid + gamma * (centroid - simplex[-1]), lower, upper)
            fe = call(expanded)
            if fe < fr:
                simplex[-1], values[-1] = expanded, fe
            else:
                simplex[-1], values[-1] = reflected, fr
            continue
        if evals >= max_evals:
            break
        contracted = _project(centroid + rho * (simplex[-1] - centroid), lower, upper)
        fc = call(contracted)
        if fc < values[-1]:
            simplex[-1], values[-1] = contracted, fc
            continue
        for i in range(1, n + 1):
            if evals >= max_evals:
                break
            simplex[i] = _project(simplex[0] + sigma * (simplex[i] - simplex[0]), lower, upper)
            values[i] = call(simplex[i])

    best = int(np.argmin(values))
    return SearchResult(simplex[best], values[best], evals, "budget")


def fd_gradient(f, x, lower, upper, rel_step=1e-3, budget=None, counter=None):
    """Central finite differences with box-clipped sample points."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    span = upper - lower
    for i in range(len(x)):
        h = rel_step * (span[i] if span[i] > 0 else 1.0)
        hi = min(x[i] + h, upper[i])
        lo = max(x[i] - h, lower[i])
        if hi <= lo:
            continue
        xp = x.copy(); xp[i] = hi
        xm = x.copy(); xm[i] = lo
        g[i] = (f(xp) - f(xm)) / (hi - lo)
    return g


def bfgs_fd(
    f: Callable[[np.ndarray], float],
    x0: np.ndarray,
    lower: np.ndarray,
    upper: np.ndarray,
    max_evals: int = 500,
    gtol: float = 1e-8,
    rel_step: float = 1e-3,
    max_backtracks: int = 25,
) -> SearchResult:
    """Quasi-Newton with finite-difference gradients and Armijo backtracking.

    Candidates are projected into the box before evaluation; the method
    never accepts a worse point, so the returned value is <= f(x0).
    """
    x = _project(np.asarray(x0, dtype=float), lower, upper)
    n = len(x)
    if max_evals <= 0:
        return SearchResult(x, float("inf"), 0, "empty-budget")
    evals = 0

    def call(p):
        nonlocal evals
        evals += 1
        value = f(p)
        if not np.isfinite(value):
            raise OptimizerAbort(f"non-finite objective at {p!r}")
        return value

    fx = call(x)
    hinv = np.eye(n)
    grad = fd_gradient(call, x, lower, upper, rel_step)
    status = "budget"
    while evals < max_evals:
        if np.max(np.abs(grad)) < gtol:
            status = "converged"
            break
        direction = -hinv @ grad
        slope = float(grad @ direction)
        if slope >= 0:
            hinv = np.eye(n)
            direction = -grad
            slope = float(grad @ direction)
            if slope >= 0:
                status = "converged"
                break
        alpha = 1.0
        accepted = None
        for _ in range(max_backtracks):
            if evals >= max_evals:
                break
            candidate = _project(x + alpha * direction, lower, upper)
            fc = call(candidate)
            step = candidate - x
            if fc <= fx + 1e-4 * float(grad @ step) and fc < fx:
                accepted = (candidate, fc)
                break
            alpha *= 0.5
        if accepted is None:
            status = "linesearch-failed"
            break
        x_new, f_new = accepted
        grad_new = fd_gradient(call, x_new, lower, upper, rel_step)
        s = x_new - x
        y = grad_new - grad
        sy = float(s @ y)
        if sy > 1e-12:
            rho_k = 1.0 / sy
            eye = np.eye(n)
            hinv = (eye - rho_k * np.outer(s, y)) @ hinv @ (eye - rho_k * np.outer(y, s)) \
                + rho_k * np.outer(s, s)
        x, fx, grad = x_new, f_new, grad_new
    return SearchResult(x, fx, evals, status)


@dataclass(frozen=True)
class ParamSpace:
    """Flat-vector layout of protocol parameters with box bounds.

    Blocks run layer by layer, constraint by constraint, each block being
    [duration, amp_0, ..., amp_{k-1}]. With tied layers only one layer of
    parameters exists and the protocol repeats it.
    """

    protocol_layers: int
    slot_counts: tuple[int, ...]
    tau_bounds: tuple[float, float]
    omega_bounds: tuple[float, float]
    tied_layers: bool = False

    @property
    def param_layers(self) -> int:
        return 1 if self.tied_layers else self.protocol_layers

    @property
    def size(self) -> int:
        return self.param_layers * sum(1 + k for k in self.slot_counts)

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        lower, upper = [], []
        for _ in range(self.param_layers):
            for k in self.slot_counts:
                lower.append(self.tau_bounds[0])
                upper.append(self.tau_bounds[1])
                lower.extend([self.omega_bounds[0]] * k)
                upper.extend([self.omega_bounds[1]] * k)
        return np.asarray(lower), np.asarray(upper)

    def to_params(self, x: Sequence[float]) -> ProtocolParams:
        x = list(x)
        if len(x) != self.size:
            raise ValueError(f"expected {self.size} parameters, got {len(x)}")
        layers_t, layers_a = [], []
        pos = 0
        for _ in range(self.param_layers):
            taus, amps = [], []
            for k in self.slot_counts:
                taus.append(float(x[pos]))
                amps.append(tuple(float(v) for v in x[pos + 1:pos + 1 + k]))
                pos += 1 + k
            layers_t.append(tuple(taus))
            layers_a.append(tuple(amps))
        if self.tied_layers:
            layers_t = layers_t * self.protocol_layers
            layers_a = layers_a * self.protocol_layers
        return ProtocolParams(tuple(layers_t), tuple(layers_a))


@dataclass(frozen=True)
class SolveConfig:
    """Everything a protocol-search run depends on (see README for the file form)."""

    seed: int = 0
    restarts: int = 20
    layers: int = 3
    budget: int = 2000
    dt: float = DEFAULT_DT
    report_dt: float = DEFAULT_REPORT_DT
    tau_min: float = TAU_BOUNDS[0]
    tau_max: float | None = None
    time_budget: float = 40.0
    omega_min: float = OMEGA_BOUNDS[0]
    omega_max: float = OMEGA_BOUNDS[1]
    initial: str = "first"
    internal_topology: str = STAR
    external_rule: str = DIAGONAL_CHAIN
    tied_layers: bool = False
    nm_diameter_tol: float = 1e-3
    nm_initial_step: float = 0.25
    gtol: float = 1e-8
    fd_rel_step: float = 1e-3
    stop_at_cost: Fraction | None = None

    def policy(self) -> CouplingPolicy:
        return CouplingPolicy(self.internal_topology, self.external_rule)

    def effective_tau_max(self, n_constraints: int) -> float:
        """Per-segment duration cap; defaults keep total time within budget."""
        if self.tau_max is not None:
            return self.tau_max
        cap = self.time_budget / (self.layers * max(n_constraints, 1))
        return min(TAU_BOUNDS[1], max(cap, self.tau_min))


@dataclass(frozen=True)
class RestartTrace:
    restart: int
    o_after_simplex: float
    o_final: float
    evals: int
    polish_status: str
    best_o_so_far: float


@dataclass(frozen=True)
class BestFeasible:
    cost: Fraction
    assignment: tuple[int, ...]
    time: float
    restart: int


@dataclass(frozen=True)
class OptimizationReport:
    seed: int
    best_o: float
    best_params: ProtocolParams
    best_restart: int
    best_feasible: BestFeasible | None
    n_evaluations: int
    traces: tuple[RestartTrace, ...]
    stopped_early: bool


class _StopSearch(Exception):
    pass


def optimize_protocol(
    problem: Problem,
    scheme: LevelScheme,
    templates: Sequence[HamiltonianTemplate],
    config: SolveConfig = SolveConfig(),
) -> OptimizationReport:
    """Multi-start minimization of the control objective.

    Each restart draws uniform parameters in bounds, runs the simplex
    search, then (when the finite-difference gradient is informative)
    the quasi-Newton polish. The report carries the lowest objective and
    the best exactly-verified feasible decoded cost seen anywhere.
    """
    tables = problem_tables(problem, scheme)
    space = ParamSpace(
        protocol_layers=config.layers,
        slot_counts=tuple(t.n_slots for t in templates),
        tau_bounds=(config.tau_min, config.effective_tau_max(len(templates))),
        omega_bounds=(config.omega_min, config.omega_max),
        tied_layers=config.tied_layers,
    )
    lower, upper = space.bounds()
    psi0 = initial_state(scheme, config.initial)

    n_evals = 0
    best_o = float("inf")
    best_x: np.ndarray | None = None
    best_restart = -1
    best_feasible: BestFeasible | None = None
    stopped = False
    traces: list[RestartTrace] = []
    current_restart = 0

    def evaluate(x: np.ndarray) -> float:
        nonlocal n_evals, best_o, best_x, best_restart, best_feasible
        n_evals += 1
        params = space.to_params(x)
        traj = run_protocol(scheme, templates, params, dt=config.dt, initial=psi0)
        report = objective_value(decode_series(traj, tables), problem)
        if report.o < best_o:
            best_o = report.o
            best_x = np.array(x, dtype=float)
            best_restart = current_restart
        if report.best_cost is not None:
            if best_feasible is None or report.best_cost > best_feasible.cost:
                best_feasible = BestFeasible(
                    cost=report.best_cost,
                    assignment=report.best_assignment,
                    time=report.first_time,
                    restart=current_restart,
                )
                if (
                    config.stop_at_cost is not None
                    and best_feasible.cost >= config.stop_at_cost
                ):
                    raise _StopSearch
        return report.o

    try:
        for r in range(config.restarts):
            current_restart = r
            rng = np.random.default_rng([config.seed, r])
            x0 = lower + rng.random(space.size) * (upper - lower)
            nm = nelder_mead(
                evaluate,
                x0,
                lower,
                upper,
                max_evals=config.budget,
                diameter_tol=config.nm_diameter_tol,
                initial_step=config.nm_initial_step,
            )
            polish_status = "skipped"
            o_final = nm.fun
            remaining = config.budget - nm.n_evals
            if remaining > 2 * space.size + 2:
                grad = fd_gradient(
                    evaluate, nm.x, lower, upper, rel_step=config.fd_rel_step
                )
                if np.max(np.abs(grad)) >= config.gtol:
                    polish = bfgs_fd(
                        evaluate,
                        nm.x,
                        lower,
                        upper,
                        max_evals=remaining - 2 * space.size,
                        gtol=config.gtol,
                        rel_step=config.fd_rel_step,
                    )
                    o_final = min(o_final, polish.fun)
                    polish_status = polish.status
            traces.append(
                RestartTrace(
                    restart=r,
                    o_after_simplex=nm.fun,
                    o_final=o_final,
                    evals=nm.n_evals,
                    polish_status=polish_status,
                    best_o_so_far=best_o,
                )
            )
    except _StopSearch:
        stopped = True

    if best_x is None:
        raise OptimizerAbort("no completed evaluations")
    return OptimizationReport(
        seed=config.seed,
        best_o=best_o,
        best_params=space.to_params(best_x),
        best_restart=best_restart,
        best_feasible=best_feasible,
        n_evaluations=n_evals,
        traces=tuple(traces),
        stopped_early=stopped,
    )
