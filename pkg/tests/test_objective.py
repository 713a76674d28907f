import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomip.dynamics import ProtocolParams, run_protocol
from atomip.encoding import build_level_scheme
from atomip.objective import (
    DecodedSeries,
    decode,
    decode_series,
    feasible_set,
    objective_value,
    problem_tables,
)


def _series(p1, assignments, times=None):
    scheme = build_level_scheme(p1)
    tables = problem_tables(p1, scheme)
    from atomip import backend

    assign = np.asarray(assignments, dtype=np.int64)
    costs, feas = backend.evaluate_assignments(
        assign,
        tables.cost_coeffs, tables.cost_offs, tables.cost_vars,
        tables.cons_poly_offs, tables.cons_coeffs, tables.cons_offs,
        tables.cons_vars, tables.cons_rhs, tables.cons_sense,
    )
    n = len(assign)
    return DecodedSeries(
        times=np.asarray(times if times is not None else np.arange(n), dtype=float),
        assignments=assign,
        feasible=np.asarray(feas, dtype=bool),
        costs_scaled=costs,
        cost_scale=tables.cost_scale,
    )


def test_decode_one_hot_levels(p1):
    scheme = build_level_scheme(p1)
    pops = np.zeros(9)
    pops[scheme.index(0, 1)] = 0.6
    pops[scheme.index(2, 2)] = 0.4
    assert decode(pops, scheme) == (1, 0, 2)


def test_decode_all_zero_manifold_ties_to_lowest(p1):
    scheme = build_level_scheme(p1)
    assert decode(np.zeros(9), scheme) == (0, 0, 0)


def test_decode_round_trip_every_level(p3):
    scheme = build_level_scheme(p3)
    for manifold in range(scheme.n_manifolds):
        for level in range(scheme.sizes[manifold]):
            pops = np.zeros(scheme.dimension)
            pops[scheme.index(manifold, level)] = 1.0
            decoded = decode(pops, scheme)
            assert decoded[manifold] == scheme.value(manifold, level)
            others = [v for j, v in enumerate(decoded) if j != manifold]
            assert all(v == 0 for v in others)


def test_decode_near_tie_resolves_low(p1):
    scheme = build_level_scheme(p1)
    pops = np.zeros(9)
    pops[scheme.index(0, 0)] = 0.5
    pops[scheme.index(0, 1)] = 0.5 + 1e-13  # within tie tolerance
    assert decode(pops, scheme)[0] == 0
    pops[scheme.index(0, 1)] = 0.5 + 1e-9  # clear winner
    assert decode(pops, scheme)[0] == 1


@settings(max_examples=40)
@given(scale=st.floats(min_value=1e-6, max_value=1e6),
       raw=st.lists(st.floats(min_value=0, max_value=1), min_size=9, max_size=9))
def test_decode_invariant_under_manifold_scaling(p1, scale, raw):
    scheme = build_level_scheme(p1)
    pops = np.asarray(raw)
    scaled = pops.copy()
    scaled[0:3] *= scale
    assert decode(pops, scheme)[0] == decode(scaled, scheme)[0]


def test_feasible_set_examples(p1):
    all_feasible = _series(p1, [(1, 1, 1)] * 4)
    assert list(feasible_set(all_feasible, p1.constraints)) == [0, 1, 2, 3]
    none = _series(p1, [(2, 2, 2)] * 3)
    assert list(feasible_set(none, p1.constraints)) == []
    one = _series(p1, [(2, 2, 2)] * 3 + [(1, 0, 1)] + [(2, 2, 2)])
    assert list(feasible_set(one, p1.constraints)) == [3]


def test_feasible_set_matches_kernel_flags(p1):
    rng = np.random.default_rng(9)
    assignments = rng.integers(0, 3, size=(200, 3))
    series = _series(p1, assignments)
    assert list(feasible_set(series, p1.constraints)) == list(np.flatnonzero(series.feasible))


def test_objective_all_feasible_is_zero(p1):
    series = _series(p1, [(1, 1, 1), (1, 0, 0), (0, 1, 0)])
    report = objective_value(series, p1)
    assert report.o == 0.0
    assert report.n_feasible == report.n_samples == 3
    assert report.best_cost == 6
    assert report.best_assignment == (1, 1, 1)
    assert report.first_time == 0.0


def test_objective_fully_infeasible_is_two(p1):
    series = _series(p1, [(2, 2, 2)] * 5)
    report = objective_value(series, p1)
    assert report.o == 2.0
    assert report.best_cost is None


def test_objective_hand_case_half(p1):
    # Two samples, both decoding to cost 6, only the second feasible:
    # O = (1 - 1/2) + (1 - 6/12) = 1.0 exactly.
    series = _series(p1, [(2, 0, 0), (1, 1, 1)])
    assert series.costs.tolist() == [6.0, 6.0]
    assert series.feasible.tolist() == [False, True]
    report = objective_value(series, p1)
    assert report.o == pytest.approx(1.0)


def test_objective_zero_total_cost_second_term(p1):
    series = _series(p1, [(0, 0, 0)] * 3)
    report = objective_value(series, p1)
    assert report.n_feasible == 3
    assert report.o == pytest.approx(1.0)  # feasible everywhere but no cost signal


def test_objective_monotone_in_new_feasible_sample(p1):
    worse = _series(p1, [(1, 1, 1), (2, 2, 2), (2, 2, 2)])
    better = _series(p1, [(1, 1, 1), (1, 1, 1), (2, 2, 2)])
    assert objective_value(better, p1).o <= objective_value(worse, p1).o


def test_objective_first_attainment_is_earliest(p1):
    series = _series(p1, [(0, 0, 0), (1, 1, 1), (1, 1, 1)], times=[0.0, 1.0, 2.0])
    report = objective_value(series, p1)
    assert report.best_cost == 6
    assert report.first_time == 1.0


def test_grid_consistency_fine_vs_report(p1, p1_encoding):
    scheme, templates = p1_encoding
    rng = np.random.default_rng(123)
    tables = problem_tables(p1, scheme)
    durations = tuple(tuple(rng.uniform(1, 5) for _ in templates) for _ in range(3))
    amplitudes = tuple(
        tuple(tuple(rng.uniform(0, 8, t.n_slots)) for t in templates) for _ in range(3)
    )
    traj = run_protocol(scheme, templates, ProtocolParams(durations, amplitudes), dt=0.01)
    fine = objective_value(decode_series(traj, tables), p1)
    coarse = objective_value(decode_series(traj.decimate(1.0), tables), p1)
    assert abs(fine.o - coarse.o) <= 0.1
