"""Simulator for solving integer programs on a single multi-level quantum system.

Variables map to manifolds of levels, constraints to coupling Hamiltonians,
and a derivative-free control search shapes the couplings until decoded
populations satisfy the constraints while maximizing the cost. Classical
baselines (brute force, exact-LP branch & bound) ship alongside.
"""

__version__ = "0.1.0"

from .backend import BACKEND
from .bnb import BnBConfig, BnBResult, solve_bnb
from .dynamics import (
    ProtocolParams,
    Trajectory,
    assemble,
    initial_state,
    propagate,
    run_protocol,
)
from .encoding import (
    CouplingPolicy,
    CouplingSlot,
    HamiltonianTemplate,
    LevelScheme,
    build_constraint_template,
    build_level_scheme,
    build_templates,
    singly_infeasible_values,
)
from .instances import load_instance
from .model import (
    Constraint,
    Metrics,
    Monomial,
    Polynomial,
    Problem,
    Variable,
    brute_force_optimum,
    check_constraint,
    classify,
    evaluate_polynomial,
    metric_b1,
    metric_b2,
    metric_b3,
)
from .objective import decode, decode_series, feasible_set, objective_value
from .optimize import SolveConfig, bfgs_fd, nelder_mead, optimize_protocol
from .parser import ParseError, SourceSpan, format_problem, parse_problem
from .relaxation import (
    LpSolution,
    solve_lp_relaxation,
    solve_relaxation_grid,
)
