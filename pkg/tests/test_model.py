import itertools
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from atomip.model import (
    CapExceededError,
    Constraint,
    EvaluationError,
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


def test_polynomial_canonical_form_merges_and_drops_zeros():
    poly = Polynomial(
        (
            Monomial(Fraction(2), (0, 1)),
            Monomial(Fraction(-2), (1, 0)),
            Monomial(Fraction(3), (2,)),
        )
    )
    assert poly.terms == (Monomial(Fraction(3), (2,)),)


def test_evaluate_p1_cost(p1):
    assert evaluate_polynomial(p1.cost, (0, 2, 2)) == 6


def test_evaluate_empty_polynomial_is_zero():
    assert evaluate_polynomial(Polynomial(), (1, 2, 3)) == 0


def test_evaluate_p2_cost_matches_enumeration(p2):
    # Independent oracle: enumerate all 27 assignments by hand-rolled loops.
    best = None
    for x in itertools.product(range(3), repeat=3):
        value = 2 * x[1] * x[2]
        assert evaluate_polynomial(p2.cost, x) == value
        if p2.is_feasible(x):
            best = value if best is None else max(best, value)
    assert evaluate_polynomial(p2.cost, (0, 2, 1)) == 4
    assert best == 4


def test_evaluate_unassigned_variable_raises(p1):
    with pytest.raises(EvaluationError):
        evaluate_polynomial(p1.cost, (1, None, 1))


def test_check_constraint_examples(p1, p3, p4):
    assert check_constraint(p4.constraints[0], (1, 0, 0)) is True
    assert check_constraint(p3.constraints[1], (0, 0, 0, 0, 0, 0, 0, 0)) is False
    assert check_constraint(p1.constraints[0], (2, 0, 0)) is False


def test_brute_force_oracle_values(p1, p2, p3, p4):
    assert brute_force_optimum(p1).value == 6
    assert brute_force_optimum(p2).value == 4
    assert brute_force_optimum(p3).value == 25
    result = brute_force_optimum(p4)
    assert result.value == 8
    assert (1, 0, 0) in result.argmax


def test_brute_force_infeasible_and_cap():
    x = Polynomial.from_pairs([(1, [0])])
    problem = Problem(
        (Variable("x1", 0, 2),),
        x,
        (Constraint("c1", x, "<=", Fraction(-1)),),
    )
    result = brute_force_optimum(problem)
    assert not result.feasible
    assert result.value is None
    with pytest.raises(CapExceededError):
        brute_force_optimum(
            Problem(tuple(Variable(f"x{i}", 0, 9) for i in range(9)), x), cap=10**6
        )


def test_classify(p1, p2):
    assert classify(p1) == "linear"
    assert classify(p2) == "nonlinear"
    const_only = Problem((Variable("x1", 0, 1),), Polynomial.constant(5))
    assert classify(const_only) == "linear"


def test_metric_b1_examples():
    assert metric_b1(6, Fraction(13, 2)) == Fraction(25, 3)  # 8.33%
    assert metric_b1(8, Fraction(31, 2)) == Fraction(375, 4)  # 93.75%
    assert metric_b1(5, 5) == 0


def test_metric_b1_tiny_denominator_guard():
    assert metric_b1(0, Fraction(1, 100)) == Fraction(1, 100) / Fraction(1, 1000) * 100


def test_metric_b2_examples(p1, p2):
    assert metric_b2(p2) == 100
    assert metric_b2(p1) == 0
    one_of_four = Problem(
        tuple(Variable(f"x{i}", 0, 2) for i in range(4)),
        Polynomial.from_pairs([(1, [0, 0]), (1, [1]), (1, [2]), (1, [3])]),
    )
    assert metric_b2(one_of_four) == 25


def test_metric_b3_examples(p1, p3):
    assert metric_b3(p1) == 100
    assert metric_b3(p3) == 100
    with_binary = Problem(
        (Variable("a", 0, 1), Variable("b", 0, 2)),
        Polynomial.from_pairs([(1, [0]), (1, [1])]),
    )
    assert metric_b3(with_binary) == 100


def test_brute_force_dominates_feasible_points(p4):
    best = brute_force_optimum(p4).value
    for x in itertools.product(range(3), repeat=3):
        if p4.is_feasible(x):
            assert p4.cost.evaluate(x) <= best


@given(
    k=st.integers(min_value=-6, max_value=6),
    x=st.tuples(*(st.integers(min_value=0, max_value=2) for _ in range(3))),
)
def test_evaluation_linear_in_coefficients(p1, k, x):
    assert evaluate_polynomial(p1.cost.scaled(k), x) == k * evaluate_polynomial(p1.cost, x)


@settings(max_examples=25)
@given(k=st.integers(min_value=1, max_value=9))
def test_b1_invariant_under_positive_cost_scaling(p1, k):
    from atomip.relaxation import solve_lp_relaxation

    scaled = Problem(p1.variables, p1.cost.scaled(k), p1.constraints)
    v_int = brute_force_optimum(scaled).value
    v_cont = solve_lp_relaxation(scaled).value
    assert metric_b1(v_int, v_cont) == metric_b1(
        brute_force_optimum(p1).value, solve_lp_relaxation(p1).value
    )


def test_linear_problems_have_zero_b2(p1, p3, p4):
    for problem in (p1, p3, p4):
        assert classify(problem) == "linear"
        assert metric_b2(problem) == 0


def test_problem_validation_rejects_bad_references():
    with pytest.raises(ValueError):
        Problem((Variable("x1", 0, 2),), Polynomial.from_pairs([(1, [3])]))
    with pytest.raises(ValueError):
        Problem(
            (Variable("x1", 0, 2), Variable("x1", 0, 1)),
            Polynomial.from_pairs([(1, [0])]),
        )
    with pytest.raises(ValueError):
        Variable("x1", 2, 0)
