"""Bias formula, decompositions, and the exact IPW error construction."""

import numpy as np
import pytest

from surveysense import (
    ObservedScale,
    SensitivityParams,
    adjusted_estimate,
    bias,
    decompose,
    error_vector,
)
from surveysense.bias import ipw_error, pop_cor, pop_cov, pop_var


def test_bias_hand_value():
    # rho 0.5, R2 0.8, unit variances: 0.5 * sqrt(0.8 / 0.2) = 1
    scale = ObservedScale(var_y=1.0, var_w=1.0, mu_hat=0.0)
    assert bias(SensitivityParams(rho=0.5, r2=0.8), scale) == pytest.approx(1.0)


def test_bias_sign_follows_rho():
    scale = ObservedScale(var_y=2.0, var_w=0.5, mu_hat=3.0)
    up = bias(SensitivityParams(rho=0.3, r2=0.4), scale)
    down = bias(SensitivityParams(rho=-0.3, r2=0.4), scale)
    assert up == pytest.approx(-down)
    assert up > 0


def test_bias_at_r2_one_needs_ideal_variance():
    scale = ObservedScale(var_y=1.0, var_w=1.0, mu_hat=0.0)
    params = SensitivityParams(rho=1.0, r2=1.0)
    with pytest.raises(ValueError):
        bias(params, scale)
    assert bias(params, scale, var_w_ideal=4.0) == pytest.approx(2.0)


def test_adjusted_estimate_removes_bias():
    scale = ObservedScale(var_y=1.0, var_w=1.0, mu_hat=5.0)
    params = SensitivityParams(rho=0.5, r2=0.8)
    assert adjusted_estimate(params, scale) == pytest.approx(4.0)


def test_sensitivity_params_validated():
    with pytest.raises(ValueError):
        SensitivityParams(rho=1.5, r2=0.5)
    with pytest.raises(ValueError):
        SensitivityParams(rho=0.0, r2=-0.1)
    with pytest.raises(ValueError):
        SensitivityParams(rho=0.0, r2=1.5)


def test_error_vector_requires_mean_one():
    with pytest.raises(ValueError, match="not normalized"):
        error_vector(np.array([2.0, 2.0]), np.array([1.0, 1.0]))
    eps = error_vector(np.array([1.5, 0.5]), np.array([0.5, 1.5]))
    np.testing.assert_allclose(eps, [1.0, -1.0])


class TestDecompose:
    @staticmethod
    def projection_pair(seed=0, n=400):
        """w is the cell-mean projection of w_ideal, so eps is orthogonal."""
        rng = np.random.default_rng(seed)
        cells = rng.integers(0, 5, size=n)
        w_ideal = np.exp(rng.normal(size=n) * 0.4)
        w_ideal /= w_ideal.mean()
        w = np.empty_like(w_ideal)
        for c in range(5):
            w[cells == c] = w_ideal[cells == c].mean()
        w /= w.mean()
        y = 1.0 + cells + rng.normal(size=n)
        return w, w_ideal, y

    @staticmethod
    def test_variance_identity():
        w, w_ideal, y = TestDecompose.projection_pair()
        dec = decompose(w, w_ideal, y)
        assert dec.var_w_ideal == pytest.approx(dec.var_w + dec.var_eps, rel=1e-12)

    @staticmethod
    def test_cov_bias_equals_estimate_shift():
        w, w_ideal, y = TestDecompose.projection_pair(seed=3)
        dec = decompose(w, w_ideal, y)
        shift = float(w @ y / w.sum() - w_ideal @ y / w_ideal.sum())
        assert dec.cov_bias == pytest.approx(shift, abs=1e-12)

    @staticmethod
    def test_formula_reproduces_exact_bias():
        # with rho and R2 measured on the same sample, Eq-form bias is exact
        w, w_ideal, y = TestDecompose.projection_pair(seed=7)
        dec = decompose(w, w_ideal, y)
        scale = ObservedScale(var_y=pop_var(y), var_w=dec.var_w, mu_hat=0.0)
        assert bias(dec.params, scale) == pytest.approx(dec.cov_bias, rel=1e-10)

    @staticmethod
    def test_degenerate_outcome_flags_rho_undefined():
        w, w_ideal, _ = TestDecompose.projection_pair(seed=1)
        dec = decompose(w, w_ideal, np.ones_like(w))
        assert not dec.rho_defined
        assert dec.params.rho == 0.0

    @staticmethod
    def test_constant_ideal_weights_rejected():
        with pytest.raises(ValueError, match="constant"):
            decompose(np.ones(4), np.ones(4), np.arange(4.0))


def test_population_moment_helpers():
    x = np.array([1.0, 2.0, 3.0, 4.0])
    assert pop_var(x) == pytest.approx(1.25)
    assert pop_cov(x, 2 * x) == pytest.approx(2.5)
    assert pop_cor(x, -x) == pytest.approx(-1.0)


class TestIPWError:
    @staticmethod
    def test_matches_direct_construction():
        rng = np.random.default_rng(12)
        n = 200
        w = np.exp(0.2 * rng.normal(size=n))
        w /= w.mean()
        num = rng.uniform(0.2, 0.8, size=n)
        den = rng.uniform(0.2, 0.8, size=n)
        eps = ipw_error(w, num, den)
        np.testing.assert_allclose(eps, w * (1 - num / den), rtol=1e-15)

    @staticmethod
    def test_equal_probabilities_mean_no_error():
        w = np.ones(5)
        p = np.full(5, 0.3)
        np.testing.assert_array_equal(ipw_error(w, p, p), np.zeros(5))

    @staticmethod
    def test_probabilities_validated():
        w = np.ones(3)
        good = np.full(3, 0.5)
        with pytest.raises(ValueError):
            ipw_error(w, np.array([0.5, 0.0, 0.5]), good)
        with pytest.raises(ValueError):
            ipw_error(w, good, np.array([0.5, 1.2, 0.5]))
        with pytest.raises(ValueError):
            ipw_error(np.ones(2), good, good)


def test_observed_scale_from_sample():
    y = np.array([0.0, 1.0, 2.0, 3.0])
    w = np.array([1.5, 0.5, 1.5, 0.5])
    scale = ObservedScale.from_sample(y, w)
    assert scale.var_y == pytest.approx(1.25)
    assert scale.var_w == pytest.approx(0.25)
    assert scale.mu_hat == pytest.approx((1.5 * 0 + 0.5 + 3.0 + 1.5) / 4.0)
