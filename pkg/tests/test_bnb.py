from fractions import Fraction

import numpy as np
import pytest

from atomip.bnb import (
    BEST_FIRST,
    BRANCHED,
    DEPTH_FIRST,
    INFEASIBLE_LEAF,
    INTEGER_LEAF,
    PRUNED,
    BnBConfig,
    solve_bnb,
    trace_records,
)
from atomip.model import (
    Constraint,
    Polynomial,
    Problem,
    Variable,
    brute_force_optimum,
)
from atomip.relaxation import UnsupportedProblemError


def test_p1_three_nodes(p1):
    result = solve_bnb(p1)
    assert result.status == "optimal"
    assert result.value == 6
    assert result.node_count == 3
    assert result.assignment == (1, 1, 1)
    dispositions = [n.disposition for n in result.nodes]
    assert dispositions == [BRANCHED, INTEGER_LEAF, INFEASIBLE_LEAF]


def test_p4_eleven_nodes(p4):
    result = solve_bnb(p4)
    assert result.status == "optimal"
    assert result.value == 8
    assert result.assignment == (1, 0, 0)
    assert result.node_count == 11
    assert result.nodes[0].lp.value == Fraction(31, 2)


def test_root_integral_is_single_node():
    problem = Problem(
        (Variable("x1", 0, 2), Variable("x2", 0, 2)),
        Polynomial.from_pairs([(1, [0]), (1, [1])]),
    )
    result = solve_bnb(problem)
    assert result.node_count == 1
    assert result.value == 4
    assert result.nodes[0].disposition == INTEGER_LEAF


def test_infeasible_root():
    x = Polynomial.from_pairs([(1, [0])])
    problem = Problem(
        (Variable("x1", 0, 2),),
        x,
        (Constraint("c1", x, ">=", Fraction(5)),),
    )
    result = solve_bnb(problem)
    assert result.status == "infeasible"
    assert result.value is None
    assert result.node_count == 1


def test_nonlinear_rejected(p2):
    with pytest.raises(UnsupportedProblemError):
        solve_bnb(p2)


def test_child_bounds_tighten_parent_on_one_variable(p4):
    result = solve_bnb(p4)
    by_id = {n.node_id: n for n in result.nodes}
    for node in result.nodes:
        if node.parent_id is None:
            continue
        parent = by_id[node.parent_id]
        changed = {
            var
            for var in set(node.bounds) | set(parent.bounds)
            if node.bounds.get(var) != parent.bounds.get(var)
        }
        assert len(changed) == 1


def test_child_lp_bound_never_exceeds_parent(p1, p4):
    for problem in (p1, p4):
        result = solve_bnb(problem)
        by_id = {n.node_id: n for n in result.nodes}
        for node in result.nodes:
            if node.parent_id is None or node.lp.status != "optimal":
                continue
            assert node.lp.value <= by_id[node.parent_id].lp.value


def test_incumbent_sequence_non_decreasing(p1, p4):
    for problem in (p1, p4):
        result = solve_bnb(problem)
        incumbents = []
        for node in result.nodes:
            if node.disposition == INTEGER_LEAF:
                if not incumbents or node.lp.value > incumbents[-1]:
                    incumbents.append(node.lp.value)
        assert incumbents == sorted(incumbents)
        assert incumbents[-1] == result.value


def test_node_limit():
    problem = Problem(
        tuple(Variable(f"x{i+1}", 0, 2) for i in range(3)),
        Polynomial.from_pairs([(2, [0]), (3, [1]), (5, [2])]),
        (
            Constraint(
                "c1",
                Polynomial.from_pairs([(2, [0]), (2, [1]), (2, [2])]),
                "<=",
                Fraction(5),
            ),
        ),
    )
    limited = solve_bnb(problem, BnBConfig(max_nodes=2))
    assert limited.status == "node-limit"
    assert limited.node_count == 2


def test_depth_first_same_value_as_best_first(p1, p4):
    for problem in (p1, p4):
        best = solve_bnb(problem, BnBConfig(search=BEST_FIRST))
        depth = solve_bnb(problem, BnBConfig(search=DEPTH_FIRST))
        assert best.value == depth.value


def test_trace_records_are_json_ready(p4):
    import json

    records = trace_records(solve_bnb(p4))
    payload = json.loads(json.dumps(records))
    assert len(payload) == 11
    assert payload[0]["id"] == 1
    assert payload[0]["parent"] is None
    assert payload[0]["lp_value"] == "31/2"
    assert {r["disposition"] for r in payload} <= {
        BRANCHED, INTEGER_LEAF, INFEASIBLE_LEAF, PRUNED,
    }


def _random_linear_problem(rng):
    n = int(rng.integers(1, 5))
    variables = tuple(Variable(f"x{i+1}", 0, 2) for i in range(n))
    cost_pairs = [(int(rng.integers(-5, 6)), [i]) for i in range(n)]
    cost = Polynomial.from_pairs(cost_pairs)
    constraints = []
    for ci in range(int(rng.integers(1, 4))):
        pairs = [(int(rng.integers(-5, 6)), [i]) for i in range(n)]
        lhs = Polynomial.from_pairs(pairs)
        if not lhs.terms:
            continue
        sense = "<=" if rng.random() < 0.7 else ">="
        rhs = Fraction(int(rng.integers(-6, 10)))
        constraints.append(Constraint(f"c{ci+1}", lhs, sense, rhs))
    return Problem(variables, cost, tuple(constraints))


def test_bnb_matches_brute_force_on_200_random_instances():
    rng = np.random.default_rng(2024)
    feasible_checked = 0
    while feasible_checked < 200:
        problem = _random_linear_problem(rng)
        oracle = brute_force_optimum(problem)
        result = solve_bnb(problem)
        if not oracle.feasible:
            assert result.status == "infeasible"
            continue
        assert result.status == "optimal"
        assert result.value == oracle.value
        assert problem.is_feasible(result.assignment)
        assert problem.cost.evaluate(result.assignment) == oracle.value
        feasible_checked += 1
