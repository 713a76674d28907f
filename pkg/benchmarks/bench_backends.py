#!/usr/bin/env python3
"""Timing comparison of the compiled kernel vs the pure-numpy fallback.

Runs the full per-evaluation pipeline (segment evolution, decoding,
feasibility/cost evaluation) on the bundled instances and prints one row
per (instance, backend) with the speedup of the compiled path.

Usage: python benchmarks/bench_backends.py [--reps N]
"""

import argparse
import time

import numpy as np

from atomip.backend import get_backends
from atomip.dynamics import assemble
from atomip.encoding import build_level_scheme, build_templates
from atomip.instances import load_instance
from atomip.objective import problem_tables


def build_workload(name, layers=3, seed=0):
    problem = load_instance(name)
    scheme = build_level_scheme(problem)
    templates = build_templates(problem, scheme)
    tables = problem_tables(problem, scheme)
    rng = np.random.default_rng(seed)
    hams, taus = [], []
    for _ in range(layers):
        for t in templates:
            hams.append(assemble(t, rng.uniform(0, 20, t.n_slots), scheme))
            taus.append(40.0 / (layers * len(templates)))
    psi0 = np.full(scheme.dimension, 1 / np.sqrt(scheme.dimension), complex)
    return np.stack(hams), np.asarray(taus), psi0, tables, scheme.dimension


def run_once(impl, workload, dt=0.01):
    hams, taus, psi0, tables, _ = workload
    pops, _ = impl.evolve_segments(hams, taus, dt, psi0)
    assign = impl.decode_populations(pops, tables.offsets, tables.lows)
    impl.evaluate_assignments(
        assign,
        tables.cost_coeffs, tables.cost_offs, tables.cost_vars,
        tables.cons_poly_offs, tables.cons_coeffs, tables.cons_offs,
        tables.cons_vars, tables.cons_rhs, tables.cons_sense,
    )
    return pops.shape[0]


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--reps", type=int, default=100)
    ap.add_argument("--dt", type=float, default=0.01)
    args = ap.parse_args()

    backends = get_backends()
    if "compiled" not in backends:
        print("note: compiled kernel not built; timing the fallback only")
    print(f"{'instance':<10}{'D':>4}{'samples':>9}{'backend':>10}{'ms/eval':>10}{'speedup':>9}")
    for name in ("p1", "p3"):
        workload = build_workload(name)
        samples = run_once(backends["python"], workload, args.dt)
        times = {}
        for bname, impl in backends.items():
            run_once(impl, workload, args.dt)  # warm-up
            start = time.perf_counter()
            for _ in range(args.reps):
                run_once(impl, workload, args.dt)
            times[bname] = (time.perf_counter() - start) / args.reps
        for bname, elapsed in times.items():
            speedup = times["python"] / elapsed
            print(
                f"{name:<10}{workload[4]:>4}{samples:>9}{bname:>10}"
                f"{elapsed*1e3:>10.2f}{speedup:>8.1f}x"
            )


if __name__ == "__main__":
    main()
