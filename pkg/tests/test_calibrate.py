"""Raking solver: closed forms, feasibility screening, estimator helpers."""

import math

import numpy as np
import pytest

from surveysense import (
    CalibrationProblem,
    InfeasibleTargetsError,
    balance_table,
    entropy_divergence,
    oracle_ipw,
    solve_raking,
    weighted_mean,
    weighted_se,
)


def random_problem(seed, n=2000, max_p=30):
    """Feasible by construction: targets realized by positive weights."""
    rng = np.random.default_rng(seed)
    p = int(rng.integers(5, max_p + 1))
    cols = []
    for _ in range(p):
        if rng.random() < 0.5:
            cols.append((rng.random(n) < rng.uniform(0.2, 0.8)).astype(float))
        else:
            cols.append(rng.normal(size=n))
    matrix = np.column_stack(cols)
    w0 = np.exp(0.3 * rng.normal(size=n))
    w0 /= w0.mean()
    return CalibrationProblem(matrix, matrix.T @ w0 / n)


class TestSolveRaking:
    @staticmethod
    def test_two_cell_closed_form(two_cell_problem):
        problem, expected = two_cell_problem
        result = solve_raking(problem)
        assert result.diagnostics.converged
        np.testing.assert_allclose(result.values, expected, rtol=1e-10)
        assert result.values.mean() == pytest.approx(1.0, abs=1e-12)

    @staticmethod
    def test_margins_hit_at_tolerance():
        problem = random_problem(3)
        result = solve_raking(problem)
        assert result.diagnostics.converged
        assert result.diagnostics.max_violation <= 1e-8
        achieved = problem.matrix.T @ result.values / problem.n
        np.testing.assert_allclose(achieved, problem.targets, atol=2e-8)

    @staticmethod
    def test_warm_start_reuses_dual():
        problem = random_problem(4)
        cold = solve_raking(problem)
        warm = solve_raking(problem, warm_start=cold.dual)
        assert warm.diagnostics.converged
        assert warm.diagnostics.iterations <= cold.diagnostics.iterations
        np.testing.assert_allclose(warm.values, cold.values, atol=1e-7)

    @staticmethod
    def test_base_weights_shift_solution(two_cell_problem):
        problem, _ = two_cell_problem
        base = np.array([2.0, 1.0, 1.0, 1.0])
        tilted = solve_raking(
            CalibrationProblem(
                problem.matrix, problem.targets, base_weights=base
            )
        )
        # within the x = 1 cell, weights stay proportional to the base
        assert tilted.values[0] == pytest.approx(2 * tilted.values[1], rel=1e-9)
        achieved = problem.matrix[:, 0] @ tilted.values / 4
        assert achieved == pytest.approx(0.75, abs=1e-9)

    @staticmethod
    def test_marginal_infeasibility_names_constraint():
        matrix = np.array([[1.0, 0.3], [0.0, -1.2], [1.0, 0.8], [0.0, 0.1]])
        problem = CalibrationProblem(
            matrix, np.array([1.2, 0.0]), column_names=("voted", "z")
        )
        with pytest.raises(InfeasibleTargetsError) as info:
            solve_raking(problem)
        assert info.value.constraint == "voted"
        assert "not attainable" in str(info.value)

    @staticmethod
    def test_boundary_target_rejected(two_cell_problem):
        problem, _ = two_cell_problem
        at_edge = CalibrationProblem(
            problem.matrix, np.array([1.0]), column_names=("x",)
        )
        with pytest.raises(InfeasibleTargetsError):
            solve_raking(at_edge)

    @staticmethod
    def test_joint_infeasibility_detected():
        # weighted mean of x1*x2 can never exceed that of x1
        rng = np.random.default_rng(11)
        x1 = (rng.random(400) < 0.5).astype(float)
        x2 = (rng.random(400) < 0.5).astype(float)
        problem = CalibrationProblem(
            np.column_stack([x1, x1 * x2]),
            np.array([0.3, 0.5]),
            column_names=("x1", "x1:x2"),
        )
        with pytest.raises(InfeasibleTargetsError) as info:
            solve_raking(problem)
        assert info.value.joint
        assert "jointly" in str(info.value)

    @staticmethod
    def test_duplicate_column_dropped_but_verified():
        rng = np.random.default_rng(5)
        x = rng.normal(size=100)
        agreeing = CalibrationProblem(
            np.column_stack([x, x]), np.array([0.1, 0.1]), column_names=("a", "b")
        )
        result = solve_raking(agreeing)
        assert result.diagnostics.dropped_columns == ("b",)
        assert result.diagnostics.converged
        # a conflicting copy is jointly infeasible, not silently dropped
        conflicting = CalibrationProblem(
            np.column_stack([x, x]), np.array([0.1, 0.3]), column_names=("a", "b")
        )
        with pytest.raises(InfeasibleTargetsError) as info:
            solve_raking(conflicting)
        assert info.value.joint


def test_weighted_mean_matches_ratio_form():
    y = np.array([1.0, 2.0, 3.0])
    w = np.array([3.0, 1.0, 2.0])
    assert weighted_mean(y, w) == pytest.approx(11.0 / 6.0)


def test_weighted_se_uniform_weights():
    y = np.array([0.0, 1.0, 2.0, 3.0])
    # reduces to population sd over sqrt(n) when weights are flat
    assert weighted_se(y, np.ones(4)) == pytest.approx(math.sqrt(5.0) / 4.0)


def test_weighted_se_scale_invariant_in_weights():
    rng = np.random.default_rng(8)
    y = rng.normal(size=50)
    w = rng.uniform(0.5, 2.0, size=50)
    assert weighted_se(y, w) == pytest.approx(weighted_se(y, 10 * w))


def test_oracle_ipw_normalizes_to_mean_one():
    w = oracle_ipw(np.array([0.2, 0.4]))
    np.testing.assert_allclose(w, [4.0 / 3.0, 2.0 / 3.0], rtol=1e-15)
    with pytest.raises(ValueError):
        oracle_ipw(np.array([0.0, 0.5]))


def test_entropy_divergence_zero_at_base():
    assert entropy_divergence(np.ones(10)) == pytest.approx(0.0, abs=1e-15)
    assert entropy_divergence(np.array([2.0, 1.0, 1.0])) > 0.0


def test_balance_table_gaps_close_after_weighting(two_cell_problem):
    problem, expected = two_cell_problem
    rows = balance_table(problem, expected)
    assert rows[0]["constraint"] == "x"
    assert rows[0]["unweighted"] == pytest.approx(0.5)
    assert rows[0]["weighted"] == pytest.approx(0.75)
    assert abs(rows[0]["gap"]) < 1e-12
