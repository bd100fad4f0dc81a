# graph_core.py
"""
Canonical attributed-graph representation and random-walk machinery.

Graphs are immutable value objects holding an undirected weighted edge list
and a dense node-feature matrix. Everything downstream works on dense n x n
float64 matrices; molecular graphs have tens of nodes, so density keeps the
eigensolver and the A^2 product simple. Nodes are indexed from 0.
"""

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Sequence, Tuple

import numpy as np

from utils.errors import (
    GraphTooLarge, InvalidDistribution, InvalidGraph, IsolatedNode, ZeroTotalDegree
)

# ============================================
# TOLERANCES AND LIMITS
# ============================================

STOCHASTIC_TOL = 1e-12      # row sums of M, probability vector sums
ROW_SUM_TOL = 1e-10         # Laplacian row sums
SYMMETRY_TOL = 1e-12        # Laplacian symmetry
PSD_TOL = 1e-9              # smallest admissible eigenvalue before clamping
MAX_NODES = 4096            # dense representation guard


def readonly(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


# ============================================
# DOMAIN TYPES
# ============================================

@dataclass(frozen=True, eq=False)
class AttributedGraph:
    """
    Undirected weighted graph with a per-node feature matrix.

    Edges are stored canonically as (min(i, j), max(i, j), w), sorted, with
    zero-weight edges dropped. Construction does not reject malformed input;
    use validate_graph() to list violations or require_valid() to raise.
    """

    node_count: int
    edges: Tuple[Tuple[int, int, float], ...]
    features: np.ndarray = field(repr=False)

    @classmethod
    def from_edges(cls, node_count: int, edges: Iterable[Sequence], features) -> 'AttributedGraph':
        """
        Build a graph from (i, j) or (i, j, w) tuples; w defaults to 1.0.

        Args:
            node_count: number of nodes n
            edges: iterable of pairs or triples, either orientation accepted
            features: n x c array-like (a flat vector is treated as one column)
        """
        canonical = []
        for edge in edges:
            if len(edge) == 2:
                i, j = edge
                w = 1.0
            elif len(edge) == 3:
                i, j, w = edge
                w = 1.0 if w is None else float(w)
            else:
                raise ValueError(f"edge must be (i, j) or (i, j, w), got {edge!r}")
            i, j = int(i), int(j)
            if w == 0.0:
                continue
            canonical.append((min(i, j), max(i, j), w))
        canonical.sort(key=lambda e: (e[0], e[1]))

        x = np.array(features, dtype=np.float64, copy=True)
        if x.ndim == 1:
            x = x.reshape(-1, 1)
        return cls(int(node_count), tuple(canonical), readonly(x))

    @property
    def feature_dim(self) -> int:
        return int(self.features.shape[1]) if self.features.ndim == 2 else 0

    @cached_property
    def adjacency(self) -> np.ndarray:
        """Dense symmetric adjacency A with A_ij = w_ij."""
        a = np.zeros((self.node_count, self.node_count), dtype=np.float64)
        for i, j, w in self.edges:
            a[i, j] = w
            a[j, i] = w
        return readonly(a)

    def with_features(self, features) -> 'AttributedGraph':
        return AttributedGraph.from_edges(self.node_count, self.edges, features)


@dataclass(frozen=True)
class Violation:
    kind: str
    detail: str


@dataclass(frozen=True)
class ValidationReport:
    violations: Tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def kinds(self):
        return [v.kind for v in self.violations]

    def to_dict(self):
        return [{'kind': v.kind, 'detail': v.detail} for v in self.violations]


@dataclass(frozen=True, eq=False)
class DegreeVector:
    values: np.ndarray


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic M = D^-1 A."""

    matrix: np.ndarray


@dataclass(frozen=True, eq=False)
class LaplacianMatrix:
    """L = D - A of a weighted undirected graph."""

    matrix: np.ndarray


# ============================================
# VALIDATION
# ============================================

def validate_graph(g: AttributedGraph) -> ValidationReport:
    """
    List every way g breaks the AttributedGraph invariants.

    Returns:
        ValidationReport: empty (ok) when the graph is well formed
    """
    violations = []
    n = g.node_count

    if n <= 0:
        violations.append(Violation('empty_graph', f"node count is {n}"))
    elif n > MAX_NODES:
        violations.append(Violation('too_large', f"{n} nodes exceeds the dense limit {MAX_NODES}"))

    seen = set()
    for i, j, w in g.edges:
        if i == j:
            violations.append(Violation('self_loop', f"edge ({i}, {j})"))
        if not (0 <= i < n and 0 <= j < n):
            violations.append(Violation('node_out_of_range', f"edge ({i}, {j}) with n = {n}"))
        if not np.isfinite(w):
            violations.append(Violation('non_finite_weight', f"edge ({i}, {j}) weight {w}"))
        elif w < 0:
            violations.append(Violation('negative_weight', f"edge ({i}, {j}) weight {w}"))
        if (i, j) in seen:
            violations.append(Violation('duplicate_edge', f"edge ({i}, {j}) listed twice"))
        seen.add((i, j))

    x = g.features
    if x.ndim != 2:
        violations.append(Violation('feature_shape', f"features must be 2-D, got shape {x.shape}"))
    else:
        if x.shape[0] != n:
            violations.append(Violation('feature_row_mismatch', f"{x.shape[0]} feature rows for {n} nodes"))
        if x.shape[1] == 0:
            violations.append(Violation('feature_shape', "feature dimension is 0"))
        if not np.all(np.isfinite(x)):
            violations.append(Violation('non_finite_feature', "features contain NaN or inf"))

    return ValidationReport(tuple(violations))


def require_valid(g: AttributedGraph) -> AttributedGraph:
    report = validate_graph(g)
    if not report.ok:
        if g.node_count > MAX_NODES:
            raise GraphTooLarge(g.node_count, MAX_NODES)
        raise InvalidGraph(report)
    return g


# ============================================
# DEGREES, LAPLACIAN, TRANSITIONS
# ============================================

def _as_vector(d) -> np.ndarray:
    if isinstance(d, DegreeVector):
        return d.values
    return np.asarray(d, dtype=np.float64)


def degrees(g: AttributedGraph) -> DegreeVector:
    """d_i = sum_j w_ij."""
    return DegreeVector(readonly(g.adjacency.sum(axis=1)))


def laplacian_from_adjacency(a: np.ndarray) -> LaplacianMatrix:
    a = np.asarray(a, dtype=np.float64)
    return LaplacianMatrix(readonly(np.diag(a.sum(axis=1)) - a))


def laplacian(g: AttributedGraph) -> LaplacianMatrix:
    return laplacian_from_adjacency(g.adjacency)


def transition_matrix(a: np.ndarray, d) -> TransitionMatrix:
    """
    M = D^-1 A.

    Raises:
        IsolatedNode: for the first node with zero degree
    """
    a = np.asarray(a, dtype=np.float64)
    d = _as_vector(d)
    isolated = np.flatnonzero(d <= 0)
    if isolated.size:
        raise IsolatedNode(int(isolated[0]))
    return TransitionMatrix(readonly(a / d[:, None]))


def _check_distribution(p: np.ndarray, n: int) -> None:
    if p.shape != (n,):
        raise InvalidDistribution(f"distribution has shape {p.shape}, expected ({n},)")
    if np.any(p < 0) or not np.all(np.isfinite(p)):
        raise InvalidDistribution("distribution has negative or non-finite entries")
    if abs(p.sum() - 1.0) > STOCHASTIC_TOL:
        raise InvalidDistribution(f"distribution sums to {p.sum()!r}, not 1")


def evolve_distribution(m: TransitionMatrix, p0, t: int) -> np.ndarray:
    """
    Push a distribution t steps forward: p_t = (M^T)^t p0.

    Args:
        m: transition matrix
        p0: starting probability vector
        t: number of steps (t = 0 returns p0)
    """
    if t < 0:
        raise InvalidDistribution(f"step count must be >= 0, got {t}")
    p = np.array(p0, dtype=np.float64)
    _check_distribution(p, m.matrix.shape[0])
    mt = m.matrix.T
    for _ in range(int(t)):
        p = mt @ p
    return p


def evolve_distribution_averaged(m: TransitionMatrix, p0, t: int) -> np.ndarray:
    """Average of steps t and t+1; converges to pi on bipartite graphs too."""
    p_t = evolve_distribution(m, p0, t)
    return 0.5 * (p_t + m.matrix.T @ p_t)


def stationary_from_degrees(d) -> np.ndarray:
    """
    pi_i = d_i / sum_j d_j, the stationary point of a reversible walk.

    Raises:
        ZeroTotalDegree: when every degree is zero
    """
    d = _as_vector(d)
    total = d.sum()
    if not total > 0:
        raise ZeroTotalDegree()
    return d / total


# ============================================
# CONNECTIVITY
# ============================================

class UnionFind:
    """Disjoint sets with path halving and union by rank."""

    def __init__(self, size: int):
        self.parent = list(range(size))
        self.rank = [0] * size

    def find(self, x: int) -> int:
        parent = self.parent
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    def union(self, a: int, b: int) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        if self.rank[ra] < self.rank[rb]:
            ra, rb = rb, ra
        self.parent[rb] = ra
        if self.rank[ra] == self.rank[rb]:
            self.rank[ra] += 1
        return True


def connected_components(g: AttributedGraph) -> Tuple[Tuple[int, ...], ...]:
    """
    Partition the nodes into connected components.

    Returns:
        tuple of sorted node-index tuples, ordered by their smallest node
    """
    uf = UnionFind(g.node_count)
    for i, j, _ in g.edges:
        uf.union(i, j)
    groups = {}
    for node in range(g.node_count):
        groups.setdefault(uf.find(node), []).append(node)
    return tuple(sorted((tuple(members) for members in groups.values()), key=lambda c: c[0]))


def is_connected(g: AttributedGraph) -> bool:
    return g.node_count > 0 and len(connected_components(g)) == 1


def is_bipartite(g: AttributedGraph) -> bool:
    neighbours = [[] for _ in range(g.node_count)]
    for i, j, _ in g.edges:
        neighbours[i].append(j)
        neighbours[j].append(i)
    colour: list = [None] * g.node_count
    for start in range(g.node_count):
        if colour[start] is not None:
            continue
        colour[start] = 0
        queue = deque([start])
        while queue:
            u = queue.popleft()
            for v in neighbours[u]:
                if colour[v] is None:
                    colour[v] = 1 - colour[u]
                    queue.append(v)
                elif colour[v] == colour[u]:
                    return False
    return True


def permute_graph(g: AttributedGraph, perm: Sequence[int]) -> AttributedGraph:
    """Relabel nodes so that old node i becomes node perm[i]."""
    perm = np.asarray(perm, dtype=np.int64)
    features = np.empty_like(g.features)
    features[perm] = g.features
    edges = [(int(perm[i]), int(perm[j]), w) for i, j, w in g.edges]
    return AttributedGraph.from_edges(g.node_count, edges, features)
