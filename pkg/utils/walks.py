# walks.py
"""
Walk views of a graph: (adjacency, stationary distribution, scaled features)
for walks of length 1, 2 and fractional length gamma.

    walk1:      A_1 = A                       pi_1 from degrees of A
    walk2:      A_2 = A^2 - diag(A^2)         pi_2 from degrees of A_2
    walk_gamma: A_g = diag(L^g) - L^g         pi_g = diag(L^g) / trace(L^g)

and in every case X_k = diag(pi_k) X.
"""

import itertools
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, Iterable, Optional

import numpy as np

from utils.errors import NotConnected, OracleScaleExceeded, TooSmall
from utils.graph_core import (
    AttributedGraph, connected_components, laplacian, readonly, require_valid,
    stationary_from_degrees
)
from utils.spectral import fractional_laplacian, gamma_adjacency, gamma_stationary


class WalkKind(str, Enum):
    WALK1 = 'walk1'
    WALK2 = 'walk2'
    WALK_GAMMA = 'walk_gamma'


WALK_ORDER = (WalkKind.WALK1, WalkKind.WALK2, WalkKind.WALK_GAMMA)


@dataclass(frozen=True, eq=False)
class WalkView:
    kind: WalkKind
    adjacency: np.ndarray
    stationary: np.ndarray
    scaled_features: np.ndarray
    gamma: Optional[float] = None


def scale_features(stationary: np.ndarray, features: np.ndarray) -> np.ndarray:
    """Row i of the result is pi_i * X[i]."""
    return stationary[:, None] * features


def _make_view(kind, adjacency, stationary, features, gamma=None) -> WalkView:
    return WalkView(
        kind=kind,
        adjacency=readonly(np.asarray(adjacency, dtype=np.float64)),
        stationary=readonly(np.asarray(stationary, dtype=np.float64)),
        scaled_features=readonly(scale_features(stationary, features)),
        gamma=gamma,
    )


def _require_connected(g: AttributedGraph) -> None:
    require_valid(g)
    components = connected_components(g)
    if len(components) != 1:
        raise NotConnected(len(components))


def walk1_view(g: AttributedGraph) -> WalkView:
    _require_connected(g)
    a = g.adjacency
    pi = stationary_from_degrees(a.sum(axis=1))
    return _make_view(WalkKind.WALK1, a, pi, g.features)


def walk2_adjacency(a: np.ndarray) -> np.ndarray:
    """A^2 with the closed 2-walks (diagonal) removed."""
    a2 = a @ a
    np.fill_diagonal(a2, 0.0)
    return a2


def walk2_view(g: AttributedGraph) -> WalkView:
    """
    Length-2 walk view. A_2 may be disconnected (P3, stars); pi_2 still
    comes from its degrees, so nodes without 2-walks get mass 0.

    Raises:
        TooSmall: fewer than 3 nodes
        ZeroTotalDegree: A_2 has no edges
    """
    _require_connected(g)
    if g.node_count < 3:
        raise TooSmall(g.node_count)
    a2 = walk2_adjacency(g.adjacency)
    pi = stationary_from_degrees(a2.sum(axis=1))
    return _make_view(WalkKind.WALK2, a2, pi, g.features)


def walk_gamma_view(g: AttributedGraph, gamma: float) -> WalkView:
    _require_connected(g)
    fl = fractional_laplacian(laplacian(g), gamma)
    return _make_view(
        WalkKind.WALK_GAMMA, gamma_adjacency(fl), gamma_stationary(fl), g.features, gamma=fl.gamma
    )


def build_view(g: AttributedGraph, kind: WalkKind, gamma: float) -> WalkView:
    kind = WalkKind(kind)
    if kind is WalkKind.WALK1:
        return walk1_view(g)
    if kind is WalkKind.WALK2:
        return walk2_view(g)
    return walk_gamma_view(g, gamma)


def count_walks_bruteforce(g: AttributedGraph, k: int, i: int, j: int) -> float:
    """
    Weighted count of length-k walks from i to j by enumerating every node
    sequence. Equals (A^k)_ij; only meant as a test oracle.
    """
    n = g.node_count
    if k < 1 or k > 6 or n > 8:
        raise OracleScaleExceeded(n, k)
    a = g.adjacency
    total = 0.0
    for middle in itertools.product(range(n), repeat=k - 1):
        path = (i, *middle, j)
        weight = 1.0
        for u, v in zip(path, path[1:]):
            weight *= a[u, v]
            if weight == 0.0:
                break
        total += weight
    return total


# ============================================
# VIEW BUNDLES
# ============================================

@dataclass(frozen=True, eq=False)
class ViewBundle:
    """All requested walk views of one (repaired) graph, plus its raw features."""

    graph_id: str
    graph: AttributedGraph
    views: Dict[WalkKind, WalkView] = field(default_factory=dict)
    repair: Optional[object] = None
    gamma: Optional[float] = None

    @property
    def raw_features(self) -> np.ndarray:
        return self.graph.features

    def view(self, kind) -> WalkView:
        return self.views[WalkKind(kind)]


def build_view_bundle(graph_id: str, g: AttributedGraph, kinds: Iterable[WalkKind],
                      gamma: float, repair=None) -> ViewBundle:
    wanted = {WalkKind(k) for k in kinds}
    views = {kind: build_view(g, kind, gamma) for kind in WALK_ORDER if kind in wanted}
    return ViewBundle(graph_id=graph_id, graph=g, views=views, repair=repair, gamma=gamma)
