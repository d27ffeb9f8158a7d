"""Path enumeration and the exact minimum blocking-set solver."""

import itertools

import numpy as np
import pytest

from surveysense import enumerate_paths, solve_separating_set
from surveysense.cover import STATUS_DIRECT, STATUS_FOUND, STATUS_NONE
from surveysense.errors import DetectionError
from surveysense.mrf import MixedGraph
from surveysense.paths import PathMatrix


def graph_from_edges(names, edges):
    weights = np.zeros((len(names), len(names)))
    idx = {n: i for i, n in enumerate(names)}
    for a, b in edges:
        weights[idx[a], idx[b]] = weights[idx[b], idx[a]] = 1.0
    return MixedGraph(
        names=tuple(names),
        kinds={n: "continuous" for n in names},
        weights=weights,
        node_lambdas={n: 0.0 for n in names},
    )


CHAIN = graph_from_edges(("y", "v", "x"), [("y", "v"), ("v", "x")])
CYCLE = graph_from_edges(
    ("y", "a", "b", "v"), [("y", "a"), ("a", "v"), ("y", "b"), ("b", "v")]
)


class TestEnumeratePaths:
    @staticmethod
    def test_chain_single_path():
        pmat = enumerate_paths(CHAIN, "y", ("x",))
        assert pmat.paths == (("y", "v", "x"),)
        assert pmat.columns == ("v", "x")
        np.testing.assert_array_equal(pmat.matrix, [[True, True]])
        assert pmat.is_direct == (False,)
        assert pmat.terminals == ("x",)

    @staticmethod
    def test_cycle_two_routes():
        pmat = enumerate_paths(CYCLE, "y", ("v",))
        assert sorted(pmat.paths) == [("y", "a", "v"), ("y", "b", "v")]

    @staticmethod
    def test_path_recorded_at_every_target_passed():
        line = graph_from_edges(("y", "s1", "s2"), [("y", "s1"), ("s1", "s2")])
        pmat = enumerate_paths(line, "y", ("s1", "s2"))
        assert ("y", "s1") in pmat.paths
        assert ("y", "s1", "s2") in pmat.paths

    @staticmethod
    def test_max_len_cuts_long_paths():
        names = ("y", "m1", "m2", "m3", "x")
        long_chain = graph_from_edges(
            names, list(zip(names[:-1], names[1:]))
        )
        assert enumerate_paths(long_chain, "y", ("x",), max_len=3).n_paths == 0
        assert enumerate_paths(long_chain, "y", ("x",), max_len=4).n_paths == 1

    @staticmethod
    def test_cap_is_enforced():
        with pytest.raises(DetectionError, match="cap"):
            enumerate_paths(CYCLE, "y", ("v",), cap=1)

    @staticmethod
    def test_node_validation():
        with pytest.raises(DetectionError):
            enumerate_paths(CHAIN, "z", ("x",))
        with pytest.raises(DetectionError):
            enumerate_paths(CHAIN, "y", ("y",))
        with pytest.raises(DetectionError):
            enumerate_paths(CHAIN, "y", ("q",))


class TestSolveSeparatingSet:
    @staticmethod
    def test_chain_blocked_by_middle_node():
        result = solve_separating_set(enumerate_paths(CHAIN, "y", ("x",)))
        assert result.status == STATUS_FOUND
        assert result.nodes == ("v",)
        assert result.certificate == ("v",)

    @staticmethod
    def test_cycle_with_partial_terminal_needs_both_routes():
        pmat = enumerate_paths(CYCLE, "y", ("v",))
        result = solve_separating_set(pmat, partial=("v",))
        assert result.status == STATUS_FOUND
        assert result.nodes == ("a", "b")

    @staticmethod
    def test_cycle_without_partial_uses_shared_terminal():
        result = solve_separating_set(enumerate_paths(CYCLE, "y", ("v",)))
        assert result.nodes == ("v",)

    @staticmethod
    def test_direct_edge_to_partial_is_unblockable():
        direct = graph_from_edges(("y", "v"), [("y", "v")])
        result = solve_separating_set(
            enumerate_paths(direct, "y", ("v",)), partial=("v",)
        )
        assert result.status == STATUS_DIRECT
        assert result.nodes == ()
        assert result.blocked_paths == (("y", "v"),)
        assert result.relaxed_nodes == ("v",)
        assert result.relaxed_partial == ("v",)

    @staticmethod
    def test_all_partial_long_path_reports_none_exists():
        pmat = enumerate_paths(CHAIN, "y", ("x",))
        result = solve_separating_set(pmat, partial=("v", "x"))
        assert result.status == STATUS_NONE
        assert result.relaxed_partial  # fallback had to spend a partial node

    @staticmethod
    def test_fallback_can_be_disabled():
        direct = graph_from_edges(("y", "v"), [("y", "v")])
        result = solve_separating_set(
            enumerate_paths(direct, "y", ("v",)),
            partial=("v",),
            allow_partial_fallback=False,
        )
        assert result.relaxed_nodes == ()

    @staticmethod
    def test_unknown_partial_rejected():
        with pytest.raises(DetectionError, match="partial"):
            solve_separating_set(enumerate_paths(CHAIN, "y", ("x",)), partial=("q",))


def brute_force_min_cover(matrix):
    """Smallest column subset hitting every row, by exhaustive search."""
    n_rows, n_cols = matrix.shape
    row_masks = [
        int("".join("1" if matrix[r, c] else "0" for c in range(n_cols))[::-1], 2)
        for r in range(n_rows)
    ]
    for size in range(n_cols + 1):
        for combo in itertools.combinations(range(n_cols), size):
            mask = sum(1 << c for c in combo)
            if all(row & mask for row in row_masks):
                return size
    return None


def random_path_matrix(rng, q):
    n_rows = int(rng.integers(1, 10))
    matrix = np.zeros((n_rows, q), dtype=bool)
    for r in range(n_rows):
        k = int(rng.integers(1, max(2, q // 2)))
        matrix[r, rng.choice(q, size=k, replace=False)] = True
    columns = tuple(f"n{j}" for j in range(q))
    paths = tuple(
        ("y",) + tuple(columns[j] for j in np.flatnonzero(matrix[r]))
        for r in range(n_rows)
    )
    return PathMatrix(
        outcome="y",
        columns=columns,
        matrix=matrix,
        paths=paths,
        terminals=tuple(p[-1] for p in paths),
        is_direct=tuple(len(p) == 2 for p in paths),
    )


def test_solver_matches_exhaustive_search():
    rng = np.random.default_rng(77)
    for _ in range(60):
        pmat = random_path_matrix(rng, q=int(rng.integers(3, 9)))
        result = solve_separating_set(pmat)
        expected = brute_force_min_cover(pmat.matrix)
        assert result.status == STATUS_FOUND
        assert len(result.nodes) == expected
        chosen = set(result.nodes)
        for row in pmat.matrix:
            assert chosen & {pmat.columns[j] for j in np.flatnonzero(row)}
