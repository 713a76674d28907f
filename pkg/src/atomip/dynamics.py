"""Hamiltonian assembly and exact layered-protocol evolution.

Units: hbar = 1, time in microseconds, coupling amplitudes in rad/us.
Each protocol segment applies one constraint's coupling Hamiltonian for a
duration; segments are evolved exactly (Hermitian eigendecomposition), so
the only numerics in play are linear-algebra roundoff.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np

from . import backend
from .encoding import HamiltonianTemplate, LevelScheme

DEFAULT_DT = 0.01           # us, fine simulation grid
DEFAULT_REPORT_DT = 1.0     # us, measurement/reporting grid
OMEGA_BOUNDS = (0.0, 20.0)  # rad/us
TAU_BOUNDS = (0.1, 10.0)    # us

INITIAL_KINDS = ("first", "uniform-low", "uniform")


def initial_state(scheme: LevelScheme, kind: str = "first") -> np.ndarray:
    """Build a normalized start state.

    'first': all population on the lowest level of the first manifold
    (the default protocol start). 'uniform-low': equal superposition of
    every manifold's lowest level. 'uniform': equal superposition of all
    levels.
    """
    psi = np.zeros(scheme.dimension, dtype=np.complex128)
    if kind == "first":
        psi[scheme.index(0, 0)] = 1.0
    elif kind == "uniform-low":
        for j in range(scheme.n_manifolds):
            psi[scheme.index(j, 0)] = 1.0
        psi /= np.sqrt(scheme.n_manifolds)
    elif kind == "uniform":
        psi[:] = 1.0 / np.sqrt(scheme.dimension)
    else:
        raise ValueError(f"unknown initial state kind {kind!r}; choose from {INITIAL_KINDS}")
    return psi


def assemble(
    template: HamiltonianTemplate,
    amplitudes: Sequence[float],
    scheme: LevelScheme,
) -> np.ndarray:
    """Hermitian coupling matrix from a template and per-slot amplitudes."""
    if len(amplitudes) != template.n_slots:
        raise ValueError(
            f"expected {template.n_slots} amplitudes, got {len(amplitudes)}"
        )
    dim = scheme.dimension
    ham = np.zeros((dim, dim), dtype=np.complex128)
    for slot, amp in zip(template.slots, amplitudes):
        row = scheme.index(slot.var_a, slot.level_a)
        col = scheme.index(slot.var_b, slot.level_b)
        ham[row, col] += amp
        ham[col, row] += amp
    return ham


def propagate(
    state: np.ndarray,
    hamiltonian: np.ndarray,
    tau: float,
    dt: float,
) -> list[tuple[float, np.ndarray]]:
    """Samples of exp(-iHt)|state> at t = dt, 2dt, ..., tau.

    The final time tau is always included (appended when not on the grid).
    """
    if tau <= 0 or dt <= 0:
        raise ValueError("tau and dt must be positive")
    if not np.all(np.isfinite(hamiltonian)):
        raise ValueError("non-finite Hamiltonian")
    w, vecs = np.linalg.eigh(np.asarray(hamiltonian, dtype=np.complex128))
    coeffs = vecs.conj().T @ np.asarray(state, dtype=np.complex128)
    n = int(np.floor(tau / dt + 1e-9))
    times = [dt * (k + 1) for k in range(n)]
    if not times or times[-1] < tau - 1e-12:
        times.append(tau)
    return [(t, vecs @ (np.exp(-1j * w * t) * coeffs)) for t in times]


@dataclass(frozen=True)
class ProtocolParams:
    """Per-(layer, constraint) durations and per-slot amplitudes.

    durations[l][i] is the time (us) constraint i's Hamiltonian runs in
    layer l; amplitudes[l][i][s] the coupling strength (rad/us) of slot s.
    """

    durations: tuple[tuple[float, ...], ...]
    amplitudes: tuple[tuple[tuple[float, ...], ...], ...]

    @property
    def n_layers(self) -> int:
        return len(self.durations)

    @property
    def total_time(self) -> float:
        return float(sum(sum(row) for row in self.durations))

    def validate(self, templates: Sequence[HamiltonianTemplate]) -> None:
        if len(self.amplitudes) != self.n_layers:
            raise ValueError("durations/amplitudes layer count mismatch")
        for lay_t, lay_a in zip(self.durations, self.amplitudes):
            if len(lay_t) != len(templates) or len(lay_a) != len(templates):
                raise ValueError("per-layer entries must match the template count")
            for tpl, amps in zip(templates, lay_a):
                if len(amps) != tpl.n_slots:
                    raise ValueError(
                        f"constraint {tpl.constraint_index}: expected "
                        f"{tpl.n_slots} amplitudes, got {len(amps)}"
                    )


@dataclass(frozen=True)
class Trajectory:
    """State populations sampled on the uniform grid t_k = k*dt."""

    times: np.ndarray       # (N+1,)
    populations: np.ndarray  # (N+1, D)
    dt: float
    total_time: float
    scheme: LevelScheme

    @property
    def n_samples(self) -> int:
        return len(self.times)

    def norms(self) -> np.ndarray:
        return self.populations.sum(axis=1)

    def decimate(self, report_dt: float) -> "Trajectory":
        """Keep every round(report_dt/dt)-th sample (the measurement grid)."""
        every = max(1, int(round(report_dt / self.dt)))
        return Trajectory(
            times=self.times[::every],
            populations=self.populations[::every],
            dt=self.dt * every,
            total_time=self.total_time,
            scheme=self.scheme,
        )


def protocol_segments(
    templates: Sequence[HamiltonianTemplate],
    params: ProtocolParams,
    scheme: LevelScheme,
) -> tuple[np.ndarray, np.ndarray]:
    """Stack (Hamiltonian, duration) for layer 1..L, constraint 1..n in order."""
    params.validate(templates)
    hams = []
    taus = []
    for lay in range(params.n_layers):
        for i, tpl in enumerate(templates):
            hams.append(assemble(tpl, params.amplitudes[lay][i], scheme))
            taus.append(params.durations[lay][i])
    dim = scheme.dimension
    if not hams:
        return np.zeros((0, dim, dim), dtype=np.complex128), np.zeros(0)
    return np.stack(hams), np.asarray(taus, dtype=np.float64)


def run_protocol(
    scheme: LevelScheme,
    templates: Sequence[HamiltonianTemplate],
    params: ProtocolParams,
    dt: float = DEFAULT_DT,
    initial: np.ndarray | None = None,
) -> Trajectory:
    """Apply every constraint Hamiltonian in order, layer by layer."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    psi0 = initial_state(scheme) if initial is None else np.asarray(initial, np.complex128)
    norm = np.linalg.norm(psi0)
    if abs(norm - 1.0) > 1e-9:
        raise ValueError(f"initial state norm {norm} is not 1")
    hams, taus = protocol_segments(templates, params, scheme)
    if np.any(taus <= 0):
        raise ValueError("all durations must be positive")
    pops, _ = backend.evolve_segments(hams, taus, dt, psi0)
    n = pops.shape[0]
    return Trajectory(
        times=np.arange(n) * dt,
        populations=pops,
        dt=dt,
        total_time=float(taus.sum()),
        scheme=scheme,
    )


def write_trajectory_csv(out: TextIO, trajectory: Trajectory, series, problem) -> None:
    """CSV export: t_us, p_<var>_<value>..., x_<var>..., feasible, cost.

    `series` is the decoded series on the same grid as `trajectory`
    (see objective.decode_series).
    """
    scheme = trajectory.scheme
    cols = ["t_us"]
    for j, var in enumerate(problem.variables):
        cols.extend(f"p_{var.name}_{scheme.value(j, k)}" for k in range(scheme.sizes[j]))
    cols.extend(f"x_{var.name}" for var in problem.variables)
    cols.extend(["feasible", "cost"])
    out.write(",".join(cols) + "\n")
    costs = series.costs
    for k in range(trajectory.n_samples):
        row = [f"{trajectory.times[k]:.6f}"]
        row.extend(f"{p:.10g}" for p in trajectory.populations[k])
        row.extend(str(int(v)) for v in series.assignments[k])
        row.append("1" if series.feasible[k] else "0")
        row.append(f"{costs[k]:.10g}")
        out.write(",".join(row) + "\n")
