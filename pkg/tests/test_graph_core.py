"""
Graph representation, validation, degrees, transitions, stationary
distributions and connectivity.
"""

import numpy as np
import pytest
from pytest import approx

from conftest import random_connected_graph
from utils.errors import InvalidDistribution, InvalidGraph, IsolatedNode, ZeroTotalDegree
from utils.graph_core import (
    ROW_SUM_TOL, SYMMETRY_TOL, AttributedGraph, connected_components, degrees, evolve_distribution,
    evolve_distribution_averaged, is_bipartite, is_connected, laplacian, permute_graph,
    require_valid, stationary_from_degrees, transition_matrix, validate_graph
)
from utils.walks import walk2_adjacency


class TestValidation:
    def test_path_is_valid(self, p3):
        assert validate_graph(p3).ok

    def test_self_loop_reported(self):
        g = AttributedGraph.from_edges(3, [(0, 1), (2, 2)], np.ones((3, 1)))
        assert 'self_loop' in validate_graph(g).kinds()

    def test_feature_row_mismatch_reported(self):
        g = AttributedGraph.from_edges(4, [(0, 1), (1, 2), (2, 3)], np.ones((3, 1)))
        assert 'feature_row_mismatch' in validate_graph(g).kinds()

    def test_negative_weight_and_out_of_range(self):
        g = AttributedGraph.from_edges(3, [(0, 1, -1.0), (1, 5)], np.ones((3, 1)))
        kinds = validate_graph(g).kinds()
        assert 'negative_weight' in kinds
        assert 'node_out_of_range' in kinds

    def test_duplicate_edge_in_either_orientation(self):
        g = AttributedGraph.from_edges(3, [(0, 1), (1, 0), (1, 2)], np.ones((3, 1)))
        assert 'duplicate_edge' in validate_graph(g).kinds()

    def test_require_valid_raises(self):
        g = AttributedGraph.from_edges(2, [(0, 0)], np.ones((2, 1)))
        with pytest.raises(InvalidGraph):
            require_valid(g)

    def test_zero_weight_edges_dropped(self):
        g = AttributedGraph.from_edges(3, [(0, 1, 0.0), (1, 2)], np.ones((3, 1)))
        assert g.edges == ((1, 2, 1.0),)

    def test_features_are_readonly(self, p3):
        with pytest.raises(ValueError):
            p3.features[0, 0] = 5.0


class TestDegreesAndLaplacian:
    def test_path_degrees(self, p3):
        assert list(degrees(p3).values) == [1.0, 2.0, 1.0]

    def test_triangle_degrees(self, k3):
        assert list(degrees(k3).values) == [2.0, 2.0, 2.0]

    def test_weighted_single_edge(self):
        g = AttributedGraph.from_edges(2, [(0, 1, 2.5)], np.ones((2, 1)))
        assert list(degrees(g).values) == [2.5, 2.5]

    def test_laplacian_rows_sum_to_zero(self, rng):
        g = random_connected_graph(rng, 9, weighted=True)
        lap = laplacian(g).matrix
        assert np.max(np.abs(lap - lap.T)) <= SYMMETRY_TOL
        assert np.max(np.abs(lap.sum(axis=1))) < ROW_SUM_TOL


class TestTransitions:
    def test_path_transition(self, p3):
        m = transition_matrix(p3.adjacency, degrees(p3)).matrix
        assert np.allclose(m, [[0, 1, 0], [0.5, 0, 0.5], [0, 1, 0]])

    def test_triangle_transition(self, k3):
        m = transition_matrix(k3.adjacency, degrees(k3)).matrix
        assert np.allclose(m, 0.5 * (np.ones((3, 3)) - np.eye(3)))

    def test_rows_are_stochastic(self, rng):
        g = random_connected_graph(rng, 12, weighted=True)
        m = transition_matrix(g.adjacency, degrees(g)).matrix
        assert np.max(np.abs(m.sum(axis=1) - 1.0)) < 1e-12

    def test_isolated_node_in_walk2_of_path(self, p3):
        a2 = walk2_adjacency(p3.adjacency)
        with pytest.raises(IsolatedNode) as info:
            transition_matrix(a2, a2.sum(axis=1))
        assert info.value.node == 1


class TestEvolution:
    def test_zero_steps_is_identity(self, k3):
        m = transition_matrix(k3.adjacency, degrees(k3))
        assert evolve_distribution(m, [0.2, 0.3, 0.5], 0) == approx([0.2, 0.3, 0.5])

    def test_one_step_on_triangle(self, k3):
        m = transition_matrix(k3.adjacency, degrees(k3))
        assert evolve_distribution(m, [1, 0, 0], 1) == approx([0, 0.5, 0.5])

    def test_averaged_path_converges(self, p3):
        m = transition_matrix(p3.adjacency, degrees(p3))
        p = evolve_distribution_averaged(m, [1, 0, 0], 50)
        assert p == approx([0.25, 0.5, 0.25], abs=1e-12)

    def test_mass_preserved(self, rng):
        g = random_connected_graph(rng, 10, weighted=True)
        m = transition_matrix(g.adjacency, degrees(g))
        p0 = np.full(10, 0.1)
        assert abs(evolve_distribution(m, p0, 25).sum() - 1.0) < 1e-10

    def test_rejects_non_distribution(self, k3):
        m = transition_matrix(k3.adjacency, degrees(k3))
        with pytest.raises(InvalidDistribution):
            evolve_distribution(m, [0.5, 0.5, 0.5], 1)


class TestStationary:
    def test_path(self, p3):
        assert stationary_from_degrees(degrees(p3)) == approx([0.25, 0.5, 0.25])

    def test_triangle(self, k3):
        assert stationary_from_degrees(degrees(k3)) == approx([1 / 3] * 3)

    def test_isolated_node_gets_zero(self):
        assert stationary_from_degrees([1.0, 0.0, 1.0]) == approx([0.5, 0.0, 0.5])

    def test_all_zero_degrees(self):
        with pytest.raises(ZeroTotalDegree):
            stationary_from_degrees([0.0, 0.0])


class TestConnectivity:
    def test_path_is_one_component(self, p3):
        assert connected_components(p3) == ((0, 1, 2),)

    def test_two_pairs(self, disconnected4):
        assert connected_components(disconnected4) == ((0, 1), (2, 3))
        assert not is_connected(disconnected4)

    def test_single_node(self):
        g = AttributedGraph.from_edges(1, [], np.ones((1, 1)))
        assert connected_components(g) == ((0,),)

    def test_bipartite(self, p3, k3):
        assert is_bipartite(p3)
        assert not is_bipartite(k3)


def test_permute_graph_relabels_edges_and_features(p3):
    g = p3.with_features(np.array([[1.0], [2.0], [3.0]]))
    h = permute_graph(g, [2, 0, 1])
    assert h.edges == ((0, 1, 1.0), (0, 2, 1.0))
    assert list(h.features[:, 0]) == [2.0, 3.0, 1.0]
