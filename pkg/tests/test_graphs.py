import numpy as np
import pytest

from graphcp import (
    ChangepointState,
    InvalidStateError,
    build_lattice,
    build_rchain,
    build_star,
    connectedness_scores,
    scale_weights,
)
from graphcp.graphs import read_graph_csv, write_graph_csv


def edge_set(graph):
    return {(a, b) for a, b, _ in graph.edges}


class TestBuilders:
    def test_star_edges(self):
        g = build_star(4)
        assert edge_set(g) == {(0, 1), (0, 2), (0, 3)}

    def test_star_minimal(self):
        assert edge_set(build_star(2)) == {(0, 1)}

    def test_star_degrees(self):
        g = build_star(6)
        assert g.degrees[0] == 5
        assert all(g.degrees[i] == 1 for i in range(1, 6))

    def test_star_too_small(self):
        with pytest.raises(InvalidStateError):
            build_star(1)

    def test_lattice_two_by_two(self):
        assert len(build_lattice(2, 2).edges) == 4

    def test_lattice_six_by_five(self):
        # l1*(l2-1) + l2*(l1-1) = 24 + 25
        assert len(build_lattice(6, 5).edges) == 49

    def test_lattice_interior_degree(self):
        g = build_lattice(6, 5)
        interior = 2 * 5 + 2  # row 2, col 2 in row-major order
        assert g.degrees[interior] == 4
        assert g.max_degree() == 4

    def test_rchain_path(self):
        assert edge_set(build_rchain(3, 1)) == {(0, 1), (1, 2)}

    def test_rchain_bandwidth_two(self):
        assert edge_set(build_rchain(4, 2)) == {(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)}

    def test_rchain_middle_degree(self):
        g = build_rchain(10, 2)
        assert g.degrees[5] == 4
        assert g.max_degree() == 4

    def test_rchain_one_equals_path_lattice(self):
        assert np.array_equal(build_rchain(5, 1).weights, build_lattice(1, 5).weights)

    def test_symmetric_zero_diagonal(self):
        for g in (build_star(5), build_lattice(3, 4), build_rchain(6, 2)):
            assert np.array_equal(g.weights, g.weights.T)
            assert np.all(np.diag(g.weights) == 0)


class TestScaleWeights:
    def test_zero_coupling(self):
        g = scale_weights(build_star(4), -10.0, 0.0)
        assert np.all(g.weights == 0)

    def test_star_scaling(self):
        g = scale_weights(build_star(30), -60.0, 0.2, "max")
        assert g.weights[0, 1] == pytest.approx(12.0 / 29.0)

    def test_mean_degree_mode(self):
        base = build_star(4)  # degrees 3, 1, 1, 1 -> mean 1.5
        g = scale_weights(base, -8.0, 0.5, "mean")
        assert g.weights[0, 1] == pytest.approx(0.5 * 8.0 / 1.5)

    def test_commutes_with_relabelling(self):
        base = build_rchain(5, 2)
        perm = [4, 2, 0, 1, 3]
        relabelled = base.weights[np.ix_(perm, perm)]
        a = scale_weights(base, -7.0, 0.4).weights[np.ix_(perm, perm)]
        from graphcp import DependencyGraph

        b = scale_weights(DependencyGraph(relabelled), -7.0, 0.4).weights
        assert np.allclose(a, b)


class TestConnectednessScores:
    def test_isolated_node_scores_one(self):
        from graphcp import DependencyGraph

        g = DependencyGraph.empty(2)
        est = ChangepointState(((4, 9), ()))
        scores = connectedness_scores(g, est, varpi=5.0)
        assert scores.c[0] == (1.0, 1.0)
        assert scores.m[0] == 2.0

    def test_degree_three_single_near_neighbor(self):
        g = build_star(4)
        est = ChangepointState(((10,), (12,), (), ()))
        scores = connectedness_scores(g, est, varpi=3.0)
        assert scores.c[0] == (0.5,)
        assert scores.m[0] == 0.5

    def test_saturation_with_large_window(self):
        g = build_star(4)
        est = ChangepointState(((10,), (50,), (90,), ()))
        scores = connectedness_scores(g, est, varpi=1000.0)
        # both active neighbours counted, degree 3
        assert scores.c[0] == ((2 + 1) / (3 + 1),)

    def test_bounds_random(self):
        rng = np.random.default_rng(4)
        g = build_rchain(8, 2)
        taus = tuple(
            tuple(sorted(rng.choice(np.arange(2, 40), size=rng.integers(0, 4), replace=False)))
            for _ in range(8)
        )
        est = ChangepointState(taus)
        scores = connectedness_scores(g, est, varpi=6.0)
        for i, row in enumerate(scores.c):
            deg = int(g.degrees[i])
            for c in row:
                assert 1 / (deg + 1) <= c <= 1.0
            assert 0.0 <= scores.m[i] <= len(est.taus[i]) + 1e-12


class TestGraphCsv:
    def test_round_trip(self, tmp_path):
        g = scale_weights(build_rchain(6, 2), -9.0, 0.4)
        path = tmp_path / "graph.csv"
        write_graph_csv(g, path)
        g2 = read_graph_csv(path)
        assert np.array_equal(g.weights, g2.weights)

    def test_explicit_node_count(self, tmp_path):
        g = build_star(3)
        path = tmp_path / "graph.csv"
        write_graph_csv(g, path)
        assert read_graph_csv(path, L=5).L == 5

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,2,0.5\n")
        from graphcp import IngestionError

        with pytest.raises(IngestionError):
            read_graph_csv(path)
