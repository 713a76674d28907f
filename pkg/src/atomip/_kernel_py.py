"""Pure-numpy implementation of the hot trajectory kernels.

Fallback for the compiled extension in `_kernel.pyx`; both expose the same
three functions and must agree to numerical precision (see tests):

    evolve_segments       piecewise-constant evolution on a uniform grid
    decode_populations    per-manifold argmax with low-value tie-break
    evaluate_assignments  integer-scaled cost and feasibility per sample
"""

from __future__ import annotations

import numpy as np

GRID_EPS = 1e-9
TIE_TOL = 1e-12


def evolve_segments(hams, taus, dt, psi0):
    """Evolve `psi0` through constant Hamiltonian segments.

    hams: (S, D, D) complex, Hermitian; taus: (S,) durations; dt: sample
    spacing. Returns (populations, psi_final) where populations has one row
    per grid time k*dt, k = 0..floor(total/dt), row 0 being |psi0|^2. Each
    segment is applied exactly via eigendecomposition, so there is no
    time-step truncation error.
    """
    hams = np.asarray(hams, dtype=np.complex128)
    taus = np.asarray(taus, dtype=np.float64)
    psi = np.asarray(psi0, dtype=np.complex128).copy()
    if not np.all(np.isfinite(hams)):
        raise ValueError("non-finite Hamiltonian entries")
    total = float(taus.sum())
    n_steps = int(np.floor(total / dt + GRID_EPS))
    times = np.arange(1, n_steps + 1) * dt
    bounds = np.cumsum(taus)
    seg_of = np.minimum(np.searchsorted(bounds, times, side="left"), len(taus) - 1)
    pops = np.empty((n_steps + 1, hams.shape[1]), dtype=np.float64)
    pops[0] = np.abs(psi) ** 2
    start = 0.0
    for s in range(len(taus)):
        w, vecs = np.linalg.eigh(hams[s])
        coeffs = vecs.conj().T @ psi
        idx = np.flatnonzero(seg_of == s)
        if idx.size:
            local = np.maximum(times[idx] - start, 0.0)
            phases = np.exp(-1j * local[:, None] * w[None, :])
            states = (phases * coeffs) @ vecs.T
            pops[idx + 1] = np.abs(states) ** 2
        psi = vecs @ (np.exp(-1j * w * taus[s]) * coeffs)
        start += taus[s]
    return pops, psi


def decode_populations(pops, offsets, lows, tie_tol=TIE_TOL):
    """Read one integer per manifold: the value of the argmax level.

    Levels within `tie_tol` of the manifold maximum tie, and ties resolve
    to the lowest value (so an all-zero manifold reads its domain minimum).
    """
    pops = np.asarray(pops, dtype=np.float64)
    m = len(offsets) - 1
    out = np.empty((pops.shape[0], m), dtype=np.int64)
    for j in range(m):
        sub = pops[:, offsets[j]:offsets[j + 1]]
        top = sub.max(axis=1, keepdims=True)
        out[:, j] = lows[j] + np.argmax(sub >= top - tie_tol, axis=1)
    return out


def _poly_values(assign, coeffs, term_offs, factors, t0, t1):
    n = assign.shape[0]
    vals = np.zeros(n, dtype=np.int64)
    for t in range(t0, t1):
        prod = np.full(n, coeffs[t], dtype=np.int64)
        for k in range(term_offs[t], term_offs[t + 1]):
            prod *= assign[:, factors[k]]
        vals += prod
    return vals


def evaluate_assignments(
    assign,
    cost_coeffs,
    cost_offs,
    cost_vars,
    cons_poly_offs,
    cons_coeffs,
    cons_offs,
    cons_vars,
    cons_rhs,
    cons_sense,
):
    """Integer-scaled cost and all-constraints feasibility per sample.

    All tables carry integer-scaled coefficients (see objective.problem_tables),
    so comparisons against the right-hand sides are exact.
    """
    assign = np.asarray(assign, dtype=np.int64)
    n = assign.shape[0]
    cost = _poly_values(assign, cost_coeffs, cost_offs, cost_vars, 0, len(cost_coeffs))
    feasible = np.ones(n, dtype=np.uint8)
    for ci in range(len(cons_rhs)):
        lhs = _poly_values(
            assign, cons_coeffs, cons_offs, cons_vars,
            cons_poly_offs[ci], cons_poly_offs[ci + 1],
        )
        ok = lhs <= cons_rhs[ci] if cons_sense[ci] == 0 else lhs >= cons_rhs[ci]
        feasible &= ok.astype(np.uint8)
    return cost, feasible
