"""Bootstrap interval behavior: determinism, shift algebra, guard rails."""

import numpy as np
import pytest

from surveysense.bias import SensitivityParams
from surveysense.bootstrap import bootstrap_interval
from surveysense.calibrate import solve_raking

ZERO = SensitivityParams(rho=0.0, r2=0.0)


@pytest.fixture(scope="module")
def outcome(mild_problem):
    problem, y = mild_problem
    return problem, y


def test_same_seed_same_interval(outcome):
    problem, y = outcome
    a = bootstrap_interval(problem, y, ZERO, b=150, seed=7)
    b = bootstrap_interval(problem, y, ZERO, b=150, seed=7)
    assert a.interval == b.interval
    assert np.array_equal(a.draws, b.draws)
    c = bootstrap_interval(problem, y, ZERO, b=150, seed=8)
    assert not np.array_equal(a.draws, c.draws)


def test_interval_brackets_point_estimate(outcome):
    problem, y = outcome
    res = bootstrap_interval(problem, y, ZERO, b=300, seed=1)
    baseline = solve_raking(problem)
    mu_hat = float(np.mean(baseline.values * y))
    assert res.lower < mu_hat < res.upper
    assert res.dropped == 0
    assert res.n_draws == 300


def test_fixed_weight_adjustment_is_pure_shift(outcome):
    problem, y = outcome
    params = SensitivityParams(rho=0.4, r2=0.3)
    plain = bootstrap_interval(problem, y, ZERO, b=200, seed=3, reestimate=False)
    adjusted = bootstrap_interval(problem, y, params, b=200, seed=3, reestimate=False)
    shifts = plain.draws - adjusted.draws
    assert np.allclose(shifts, shifts[0], rtol=0.0, atol=1e-12)
    np.testing.assert_allclose(
        adjusted.upper - adjusted.lower, plain.upper - plain.lower, rtol=1e-12
    )


def test_reestimate_changes_draws(outcome):
    problem, y = outcome
    fixed = bootstrap_interval(problem, y, ZERO, b=120, seed=5, reestimate=False)
    redo = bootstrap_interval(problem, y, ZERO, b=120, seed=5, reestimate=True)
    assert not np.array_equal(fixed.draws, redo.draws)


def test_few_draws_warns(outcome):
    problem, y = outcome
    with pytest.warns(UserWarning, match="below the 100"):
        bootstrap_interval(problem, y, ZERO, b=20, seed=0)


def test_argument_validation(outcome):
    problem, y = outcome
    with pytest.raises(ValueError, match="at least one"):
        bootstrap_interval(problem, y, ZERO, b=0)
    with pytest.raises(ValueError, match="alpha"):
        bootstrap_interval(problem, y, ZERO, b=200, alpha=1.0)
    with pytest.raises(ValueError, match="length"):
        bootstrap_interval(problem, y[:-1], ZERO, b=200)


def test_threads_match_serial(outcome):
    problem, y = outcome
    serial = bootstrap_interval(problem, y, ZERO, b=120, seed=11, threads=None)
    pooled = bootstrap_interval(problem, y, ZERO, b=120, seed=11, threads=4)
    np.testing.assert_array_equal(serial.draws, pooled.draws)


def test_supplied_baseline_skips_resolve(outcome):
    problem, y = outcome
    baseline = solve_raking(problem)
    res = bootstrap_interval(
        problem, y, ZERO, b=150, seed=2, reestimate=False, baseline=baseline
    )
    direct = bootstrap_interval(problem, y, ZERO, b=150, seed=2, reestimate=False)
    np.testing.assert_array_equal(res.draws, direct.draws)
