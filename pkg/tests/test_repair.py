import numpy as np
import pytest

from utils.errors import EmptyGraph, InvalidGraph
from utils.graph_core import AttributedGraph, is_connected
from utils.repair import RepairReason, RepairRecord, repair


def test_disconnected_gets_hub_node(disconnected4):
    g, record = repair(disconnected4)
    assert g.node_count == 5
    assert record.reason is RepairReason.DISCONNECTED
    assert record.added_nodes == (4,)
    assert record.original_node_count == 4
    assert [(i, j, w) for i, j, w in g.edges if j == 4] == [(0, 4, 1.0), (1, 4, 1.0), (2, 4, 1.0), (3, 4, 1.0)]
    assert list(g.features[4]) == [0.0, 0.0]
    assert is_connected(g)


def test_two_node_becomes_triangle():
    g, record = repair(AttributedGraph.from_edges(2, [(0, 1, 3.0)], np.ones((2, 1))))
    assert record.reason is RepairReason.TWO_NODE
    assert g.edges == ((0, 1, 3.0), (0, 2, 1.0), (1, 2, 1.0))
    assert g.features[2, 0] == 0.0


def test_single_node_becomes_triangle():
    g, record = repair(AttributedGraph.from_edges(1, [], [[7.0, 8.0]]))
    assert record.reason is RepairReason.SINGLE_NODE
    assert record.added_nodes == (1, 2)
    assert g.node_count == 3 and len(g.edges) == 3
    assert np.array_equal(g.features, [[7.0, 8.0], [0.0, 0.0], [0.0, 0.0]])


def test_connected_graph_untouched(p3):
    g, record = repair(p3)
    assert g is p3
    assert record.reason is RepairReason.NONE
    assert not record.repaired


def test_original_part_preserved_and_idempotent(disconnected4):
    g, _ = repair(disconnected4)
    assert np.array_equal(g.features[:4], disconnected4.features)
    assert set(disconnected4.edges) <= set(g.edges)
    again, record = repair(g)
    assert again is g
    assert record.reason is RepairReason.NONE


def test_isolated_nodes_in_two_node_graph():
    g, record = repair(AttributedGraph.from_edges(2, [], np.ones((2, 1))))
    assert record.reason is RepairReason.DISCONNECTED
    assert is_connected(g) and g.node_count == 3


def test_empty_graph():
    with pytest.raises(EmptyGraph):
        repair(AttributedGraph.from_edges(0, [], np.zeros((0, 1))))


def test_invalid_graph_rejected():
    with pytest.raises(InvalidGraph):
        repair(AttributedGraph.from_edges(3, [(0, 0)], np.ones((3, 1))))


def test_record_round_trips_through_dict():
    record = RepairRecord(4, (4,), RepairReason.DISCONNECTED)
    assert RepairRecord.from_dict(record.to_dict()) == record
