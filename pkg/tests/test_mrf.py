"""Nodewise lasso graph estimation over mixed variable types."""

import numpy as np
import pytest

from surveysense.errors import DetectionError
from surveysense.mrf import MixedGraph, cv_lambda, fit_mrf, lasso_path
from surveysense.simulate import gaussian_mrf_sample


CHAIN_PRECISION = np.array(
    [[1.0, 0.6, 0.0], [0.6, 2.0, 0.6], [0.0, 0.6, 1.0]]
)


def chain_columns(n=2000, seed=0):
    return gaussian_mrf_sample(CHAIN_PRECISION, ("x", "v", "y"), n, seed=seed)


def test_lasso_path_shrinks_to_zero():
    rng = np.random.default_rng(14)
    x = rng.standard_normal((300, 4))
    y = x @ np.array([1.0, -0.5, 0.0, 0.0]) + 0.3 * rng.standard_normal(300)
    lambdas = np.geomspace(2.0, 0.001, 12)
    path = lasso_path(x, y, "continuous", lambdas)
    assert np.all(path[0] == 0.0)  # heaviest penalty kills everything
    dense = path[-1][0]
    assert abs(dense[0] - 1.0) < 0.1
    assert abs(dense[2]) < 0.05
    # penalties descend, so support can only grow
    supports = [int(np.count_nonzero(c)) for c in path]
    assert supports == sorted(supports)


def test_lasso_path_logistic_recovers_sign():
    rng = np.random.default_rng(15)
    x = rng.standard_normal((800, 3))
    prob = 1.0 / (1.0 + np.exp(-(1.5 * x[:, 0] - x[:, 1])))
    y = (rng.random(800) < prob).astype(float)
    coefs = lasso_path(x, y, "binary", np.array([0.01]))[0][0]
    assert coefs[0] > 0.5
    assert coefs[1] < -0.3
    assert abs(coefs[2]) < 0.2


def test_lasso_path_unknown_kind():
    with pytest.raises(DetectionError):
        lasso_path(np.zeros((5, 2)), np.zeros(5), "ordinal", np.array([0.1]))


def test_cv_lambda_deterministic_given_rng_key():
    rng = np.random.default_rng(22)
    x = rng.standard_normal((200, 3))
    y = x[:, 0] + 0.5 * rng.standard_normal(200)
    lambdas = np.geomspace(1.0, 0.01, 10)
    pick = cv_lambda(x, y, "continuous", lambdas, rng=np.random.default_rng(1))
    again = cv_lambda(x, y, "continuous", lambdas, rng=np.random.default_rng(1))
    assert pick == again
    assert pick in lambdas
    with pytest.raises(DetectionError):
        cv_lambda(x, y, "continuous", lambdas, folds=300, rng=rng)


class TestFitMRF:
    @staticmethod
    def test_recovers_chain():
        cols = chain_columns()
        kinds = {k: "continuous" for k in cols}
        graph = fit_mrf(cols, kinds, lam="cv", seed=0)
        names = {frozenset((a, b)) for a, b, _ in graph.edges()}
        assert frozenset(("x", "v")) in names
        assert frozenset(("v", "y")) in names
        assert frozenset(("x", "y")) not in names

    @staticmethod
    def test_weights_symmetric_zero_diagonal():
        cols = chain_columns(n=500, seed=3)
        graph = fit_mrf(cols, {k: "continuous" for k in cols}, lam=0.1)
        np.testing.assert_array_equal(graph.weights, graph.weights.T)
        np.testing.assert_array_equal(np.diag(graph.weights), 0.0)

    @staticmethod
    def test_deterministic():
        cols = chain_columns(n=400, seed=5)
        kinds = {k: "continuous" for k in cols}
        a = fit_mrf(cols, kinds, lam="cv", seed=9)
        b = fit_mrf(cols, kinds, lam="cv", seed=9)
        np.testing.assert_array_equal(a.weights, b.weights)
        assert a.node_lambdas == b.node_lambdas

    @staticmethod
    def test_mixed_kinds_with_binary_node():
        rng = np.random.default_rng(8)
        n = 1500
        x = rng.standard_normal(n)
        b = (rng.random(n) < 1.0 / (1.0 + np.exp(-1.8 * x))).astype(float)
        y = 1.2 * b + 0.5 * rng.standard_normal(n)
        graph = fit_mrf(
            {"x": x, "b": b, "y": y},
            {"x": "continuous", "b": "binary", "y": "continuous"},
            lam="cv",
            seed=2,
        )
        names = {frozenset(e[:2]) for e in graph.edges()}
        assert frozenset(("x", "b")) in names
        assert frozenset(("b", "y")) in names

    @staticmethod
    def test_too_few_nodes():
        with pytest.raises(DetectionError, match="two nodes"):
            fit_mrf({"x": np.zeros(5)}, {"x": "continuous"})

    @staticmethod
    def test_constant_node_rejected():
        with pytest.raises(DetectionError, match="constant"):
            fit_mrf(
                {"x": np.ones(50), "y": np.arange(50.0)},
                {"x": "continuous", "y": "continuous"},
            )


def test_mixed_graph_helpers():
    weights = np.array([[0.0, 0.4, 0.0], [0.4, 0.0, 0.2], [0.0, 0.2, 0.0]])
    graph = MixedGraph(
        names=("a", "b", "c"),
        kinds={n: "continuous" for n in "abc"},
        weights=weights,
        node_lambdas={n: 0.1 for n in "abc"},
    )
    assert graph.neighbors("b") == ("a", "c")
    assert graph.adjacency().sum() == 4
    assert graph.edges() == [("a", "b", 0.4), ("b", "c", 0.2)]
    with pytest.raises(DetectionError):
        graph.index("z")
