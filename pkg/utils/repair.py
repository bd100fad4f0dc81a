# repair.py
"""
Dataset preparation that makes every graph connected with at least three
nodes, so that walk1, walk2 and walk_gamma views all exist.

    disconnected (any n): one virtual node joined to every original node
    connected, n == 2:    one virtual node joined to both nodes (triangle)
    n == 1:               two virtual nodes joined to the node and each other

Virtual nodes get all-zero feature rows and unit-weight edges, and are
appended after the original nodes so original indices never move.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Tuple

import numpy as np

from utils.errors import EmptyGraph
from utils.graph_core import AttributedGraph, connected_components, require_valid

VIRTUAL_EDGE_WEIGHT = 1.0


class RepairReason(str, Enum):
    NONE = 'none'
    DISCONNECTED = 'disconnected'
    TWO_NODE = 'two_node'
    SINGLE_NODE = 'single_node'


@dataclass(frozen=True)
class RepairRecord:
    original_node_count: int
    added_nodes: Tuple[int, ...]
    reason: RepairReason

    @property
    def repaired(self) -> bool:
        return self.reason is not RepairReason.NONE

    def to_dict(self):
        return {
            'original_node_count': self.original_node_count,
            'added_nodes': list(self.added_nodes),
            'reason': self.reason.value,
        }

    @classmethod
    def from_dict(cls, data) -> 'RepairRecord':
        return cls(
            original_node_count=int(data['original_node_count']),
            added_nodes=tuple(int(i) for i in data.get('added_nodes', [])),
            reason=RepairReason(data.get('reason', 'none')),
        )


def _pad(g: AttributedGraph, extra_nodes: int, extra_edges) -> AttributedGraph:
    padding = np.zeros((extra_nodes, g.feature_dim), dtype=np.float64)
    features = np.vstack([g.features, padding])
    return AttributedGraph.from_edges(g.node_count + extra_nodes, list(g.edges) + extra_edges, features)


def repair(g: AttributedGraph) -> Tuple[AttributedGraph, RepairRecord]:
    """
    Pad g until it is connected with n >= 3.

    Returns:
        (graph, RepairRecord); the graph is g itself when nothing was needed

    Raises:
        EmptyGraph: n == 0
        InvalidGraph: g breaks any other invariant
    """
    n = g.node_count
    if n <= 0:
        raise EmptyGraph()
    require_valid(g)

    if n == 1:
        edges = [(0, 1, VIRTUAL_EDGE_WEIGHT), (0, 2, VIRTUAL_EDGE_WEIGHT), (1, 2, VIRTUAL_EDGE_WEIGHT)]
        return _pad(g, 2, edges), RepairRecord(1, (1, 2), RepairReason.SINGLE_NODE)

    if len(connected_components(g)) > 1:
        edges = [(i, n, VIRTUAL_EDGE_WEIGHT) for i in range(n)]
        return _pad(g, 1, edges), RepairRecord(n, (n,), RepairReason.DISCONNECTED)

    if n == 2:
        edges = [(0, 2, VIRTUAL_EDGE_WEIGHT), (1, 2, VIRTUAL_EDGE_WEIGHT)]
        return _pad(g, 1, edges), RepairRecord(2, (2,), RepairReason.TWO_NODE)

    return g, RepairRecord(n, (), RepairReason.NONE)
