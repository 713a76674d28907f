"""Command-line front end.

Subcommands: parse, metrics, brute, bnb, solve. Machine-readable reports
go to stdout as JSON (and into --out as report.json, plus trajectory.csv /
bnb_trace.json where applicable). Exit codes are stable: 0 ok, 2 parse
error, 3 I/O error, 4 unsupported problem or cap exceeded, 5 optimizer
abort. Reports contain only deterministic quantities, so a fixed seed and
config reproduce them byte for byte; wall-clock goes to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import sys
import time
from fractions import Fraction
from pathlib import Path

from . import __version__
from .bnb import BnBConfig, solve_bnb, trace_records
from .dynamics import run_protocol, write_trajectory_csv
from .encoding import (
    CHAIN,
    DIAGONAL_CHAIN,
    EXPLICIT,
    STAR,
    CouplingPolicy,
    build_level_scheme,
    build_templates,
)
from .instances import BUNDLED, instance_text
from .model import (
    CapExceededError,
    Problem,
    brute_force_optimum,
    build_metrics,
    classify,
)
from .objective import decode_series, objective_value, problem_tables
from .optimize import OptimizerAbort, SolveConfig, optimize_protocol
from .parser import ParseError, format_problem, parse_problem
from .relaxation import UnsupportedProblemError, continuous_optimum
from .dynamics import initial_state

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_IO = 3
EXIT_UNSUPPORTED = 4
EXIT_OPTIMIZER = 5


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _read_text(path: str) -> str:
    if path.startswith("builtin:"):
        name = path.split(":", 1)[1]
        if name not in BUNDLED:
            raise CliError(f"unknown builtin instance {name!r}", EXIT_IO)
        return instance_text(name)
    try:
        return Path(path).read_text("utf-8")
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from exc


def _load_problem(path: str) -> tuple[Problem, str]:
    text = _read_text(path)
    try:
        problem = parse_problem(text)
    except ParseError as exc:
        raise CliError(f"{path}: {exc}", EXIT_PARSE) from exc
    return problem, format_problem(problem)


def _digest(canonical: str) -> str:
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _frac(value: Fraction | None) -> dict | None:
    if value is None:
        return None
    return {"exact": str(value), "float": float(value)}


def _emit(report: dict, out_dir: str | None) -> None:
    payload = json.dumps(report, indent=2, sort_keys=True) + "\n"
    sys.stdout.write(payload)
    if out_dir:
        directory = Path(out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        (directory / "report.json").write_text(payload, "utf-8")


def _base_report(mode: str, canonical: str) -> dict:
    return {
        "mode": mode,
        "problem_digest": _digest(canonical),
        "tool": {"name": "atomip", "version": __version__},
    }


def cmd_parse(args) -> int:
    _, canonical = _load_problem(args.problem)
    sys.stdout.write(canonical)
    return EXIT_OK


def cmd_metrics(args) -> int:
    problem, canonical = _load_problem(args.problem)
    kind = classify(problem)
    try:
        bf = brute_force_optimum(problem, cap=args.cap)
        if not bf.feasible:
            raise CliError("problem is infeasible; metrics undefined", EXIT_UNSUPPORTED)
        v_cont, method = continuous_optimum(problem)
    except (CapExceededError, UnsupportedProblemError) as exc:
        raise CliError(str(exc), EXIT_UNSUPPORTED) from exc
    metrics = build_metrics(problem, bf.value, v_cont)
    report = _base_report("metrics", canonical)
    report["results"] = {
        "classification": kind,
        "b1": _frac(metrics.b1),
        "b2": _frac(metrics.b2),
        "b3": _frac(metrics.b3),
        "v_int": _frac(metrics.v_int),
        "v_cont": _frac(metrics.v_cont),
        "v_cont_method": method,
        "n_tot": metrics.n_tot,
        "n_bin": metrics.n_bin,
        "n_int": metrics.n_int,
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_brute(args) -> int:
    problem, canonical = _load_problem(args.problem)
    try:
        bf = brute_force_optimum(problem, cap=args.cap)
    except CapExceededError as exc:
        raise CliError(str(exc), EXIT_UNSUPPORTED) from exc
    report = _base_report("brute", canonical)
    report["results"] = {
        "status": "optimal" if bf.feasible else "infeasible",
        "value": _frac(bf.value),
        "argmax": [list(a) for a in bf.argmax],
    }
    _emit(report, args.out)
    return EXIT_OK


def cmd_bnb(args) -> int:
    problem, canonical = _load_problem(args.problem)
    try:
        result = solve_bnb(problem, BnBConfig(max_nodes=args.max_nodes, search=args.search))
    except UnsupportedProblemError as exc:
        raise CliError(str(exc), EXIT_UNSUPPORTED) from exc
    report = _base_report("bnb", canonical)
    report["conventions"] = {
        "node_count": "LP-solved nodes including the root",
        "search": result.search,
        "branching": "largest fractional part, ties to lowest index",
        "pruning": "bound <= incumbent",
    }
    report["results"] = {
        "status": result.status,
        "value": _frac(result.value),
        "assignment": list(result.assignment) if result.assignment else None,
        "node_count": result.node_count,
    }
    _emit(report, args.out)
    if args.out:
        trace = json.dumps(trace_records(result), indent=2, sort_keys=True) + "\n"
        (Path(args.out) / "bnb_trace.json").write_text(trace, "utf-8")
    return EXIT_OK


def _parse_config_file(path: str) -> dict:
    values: dict[str, object] = {}
    explicit: list[tuple[int, int, int, int, int]] = []
    for raw_line in _read_text(path).splitlines():
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise CliError(f"{path}: bad config line {raw_line!r}", EXIT_PARSE)
        key, _, value = line.partition("=")
        key = key.strip().replace("-", "_")
        value = value.strip()
        if key == "external_slot":
            parts = value.split()
            if len(parts) != 5:
                raise CliError(
                    f"{path}: external_slot needs 5 integers, got {value!r}", EXIT_PARSE
                )
            explicit.append(tuple(int(p) for p in parts))
        else:
            values[key] = value
    if explicit:
        values["explicit_external"] = tuple(explicit)
    return values


_CONFIG_CASTS = {
    "seed": int,
    "restarts": int,
    "layers": int,
    "budget": int,
    "dt": float,
    "report_dt": float,
    "tau_min": float,
    "tau_max": float,
    "time_budget": float,
    "omega_min": float,
    "omega_max": float,
    "initial": str,
    "internal_topology": str,
    "external_rule": str,
    "tied_layers": lambda v: str(v).lower() in ("1", "true", "yes"),
    "nm_diameter_tol": float,
    "nm_initial_step": float,
    "gtol": float,
    "fd_rel_step": float,
    "stop_at_cost": Fraction,
}


def _build_solve_config(args) -> tuple[SolveConfig, tuple]:
    values: dict[str, object] = {}
    if args.policy:
        values.update(_parse_config_file(args.policy))
    for key in _CONFIG_CASTS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    explicit = values.pop("explicit_external", ())
    kwargs = {}
    for key, value in values.items():
        if key not in _CONFIG_CASTS:
            raise CliError(f"unknown config key {key!r}", EXIT_PARSE)
        kwargs[key] = _CONFIG_CASTS[key](value)
    try:
        return SolveConfig(**kwargs), tuple(explicit)
    except (TypeError, ValueError) as exc:
        raise CliError(f"bad configuration: {exc}", EXIT_PARSE) from exc


def _config_dict(config: SolveConfig, explicit: tuple) -> dict:
    out = {
        "seed": config.seed,
        "restarts": config.restarts,
        "layers": config.layers,
        "budget": config.budget,
        "dt": config.dt,
        "report_dt": config.report_dt,
        "tau_min": config.tau_min,
        "tau_max": config.tau_max,
        "time_budget": config.time_budget,
        "omega_min": config.omega_min,
        "omega_max": config.omega_max,
        "initial": config.initial,
        "internal_topology": config.internal_topology,
        "external_rule": config.external_rule,
        "tied_layers": config.tied_layers,
        "stop_at_cost": None if config.stop_at_cost is None else str(config.stop_at_cost),
    }
    if explicit:
        out["external_slots"] = [list(s) for s in explicit]
    return out


def cmd_solve(args) -> int:
    problem, canonical = _load_problem(args.problem)
    config, explicit = _build_solve_config(args)
    scheme = build_level_scheme(problem)
    policy = CouplingPolicy(
        internal_topology=config.internal_topology,
        external_rule=config.external_rule,
        explicit_external=explicit,
    )
    templates = build_templates(problem, scheme, policy)
    report = _base_report("solve", canonical)
    report["seed"] = config.seed
    report["config"] = _config_dict(config, explicit)
    report["conventions"] = {
        "initial_state": config.initial,
        "objective_grid": "fine grid (dt)",
        "reporting_grid": "decimated to report_dt",
    }
    started = time.perf_counter()
    try:
        opt = optimize_protocol(problem, scheme, templates, config)
    except OptimizerAbort as exc:
        report["error"] = str(exc)
        _emit(report, args.out)
        print(f"optimizer abort: {exc}", file=sys.stderr)
        return EXIT_OPTIMIZER
    wall = time.perf_counter() - started

    tables = problem_tables(problem, scheme)
    traj = run_protocol(
        scheme,
        templates,
        opt.best_params,
        dt=config.dt,
        initial=initial_state(scheme, config.initial),
    )
    fine = decode_series(traj, tables)
    fine_report = objective_value(fine, problem)
    decimated = traj.decimate(config.report_dt)
    report_series = decode_series(decimated, tables)
    report_objective = objective_value(report_series, problem)

    best = opt.best_feasible
    report["results"] = {
        "best_o": opt.best_o,
        "best_o_report_grid": report_objective.o,
        "best_restart": opt.best_restart,
        "n_evaluations": opt.n_evaluations,
        "stopped_early": opt.stopped_early,
        "best_feasible": None
        if best is None
        else {
            "cost": _frac(best.cost),
            "assignment": list(best.assignment),
            "first_attainment_us": best.time,
            "restart": best.restart,
        },
        "best_protocol": {
            "durations_us": [list(row) for row in opt.best_params.durations],
            "amplitudes_rad_per_us": [
                [list(a) for a in layer] for layer in opt.best_params.amplitudes
            ],
        },
        "restart_objectives": [t.o_final for t in opt.traces],
    }
    report["timing"] = {
        "simulated_total_us": opt.best_params.total_time,
        "fine_samples": fine_report.n_samples,
        "report_samples": report_objective.n_samples,
        "evaluations": opt.n_evaluations,
    }
    _emit(report, args.out)
    if args.out:
        buf = io.StringIO()
        write_trajectory_csv(buf, decimated, report_series, problem)
        (Path(args.out) / "trajectory.csv").write_text(buf.getvalue(), "utf-8")
    print(f"wall-clock: {wall:.2f} s", file=sys.stderr)
    return EXIT_OK


def build_arg_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="atomip",
        description="Solve integer programs on a simulated multi-level quantum system.",
    )
    ap.add_argument("--version", action="version", version=f"atomip {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("problem", help="path to a .ip file, or builtin:p1..p4")
        p.add_argument("--out", help="directory for report.json and data files")

    p = sub.add_parser("parse", help="parse and reprint in canonical form")
    p.add_argument("problem", help="path to a .ip file, or builtin:p1..p4")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("metrics", help="hardness metrics (relaxation gap etc.)")
    add_common(p)
    p.add_argument("--cap", type=int, default=10**7, help="brute-force assignment cap")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("brute", help="exhaustive optimum (the oracle)")
    add_common(p)
    p.add_argument("--cap", type=int, default=10**7)
    p.set_defaults(func=cmd_brute)

    p = sub.add_parser("bnb", help="branch & bound baseline (linear only)")
    add_common(p)
    p.add_argument("--search", choices=["best-first", "depth-first"], default="best-first")
    p.add_argument("--max-nodes", type=int, default=100_000)
    p.set_defaults(func=cmd_bnb)

    p = sub.add_parser("solve", help="encode, optimize couplings, decode solution")
    add_common(p)
    p.add_argument("--seed", type=int)
    p.add_argument("--restarts", type=int)
    p.add_argument("--layers", type=int)
    p.add_argument("--budget", type=int, help="objective evaluations per restart")
    p.add_argument("--dt", type=float, help="fine simulation step, us")
    p.add_argument("--report-dt", dest="report_dt", type=float, help="reporting step, us")
    p.add_argument("--tau-min", dest="tau_min", type=float)
    p.add_argument("--tau-max", dest="tau_max", type=float)
    p.add_argument("--time-budget", dest="time_budget", type=float,
                   help="cap on total simulated time, us")
    p.add_argument("--omega-min", dest="omega_min", type=float)
    p.add_argument("--omega-max", dest="omega_max", type=float)
    p.add_argument("--initial", choices=["first", "uniform-low", "uniform"])
    p.add_argument("--internal-topology", dest="internal_topology",
                   choices=[STAR, CHAIN])
    p.add_argument("--external-rule", dest="external_rule",
                   choices=[DIAGONAL_CHAIN, EXPLICIT])
    p.add_argument("--tied-layers", dest="tied_layers", action="store_const", const=True)
    p.add_argument("--stop-at-cost", dest="stop_at_cost", type=Fraction,
                   help="stop once a feasible decode reaches this cost")
    p.add_argument("--policy", help="run-configuration file (key = value lines)")
    p.set_defaults(func=cmd_solve)
    return ap


def main(argv=None) -> int:
    args = build_arg_parser().parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(str(exc), file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
