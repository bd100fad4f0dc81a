"""Shared graph fixtures: P3, K3, the star S4 and a disconnected 4-node graph."""

import numpy as np
import pytest

from utils.features import PoolingSpec, ViewSelection, fingerprint
from utils.graph_core import AttributedGraph, is_connected
from utils.shallow_model import ModelConfig


def path3(features=None):
    return AttributedGraph.from_edges(3, [(0, 1), (1, 2)], np.ones((3, 1)) if features is None else features)


def triangle(features=None):
    return AttributedGraph.from_edges(3, [(0, 1), (1, 2), (0, 2)], np.ones((3, 1)) if features is None else features)


def star4(features=None):
    return AttributedGraph.from_edges(4, [(0, 1), (0, 2), (0, 3)], np.ones((4, 1)) if features is None else features)


def two_pairs(features=None):
    x = np.arange(8, dtype=float).reshape(4, 2) + 1.0 if features is None else features
    return AttributedGraph.from_edges(4, [(0, 1), (2, 3)], x)


def random_connected_graph(rng, n, weighted=False, feature_dim=2):
    """Random spanning tree plus extra edges; unit or uniform(0.5, 2) weights."""
    edges = {}
    order = rng.permutation(n)
    for k in range(1, n):
        u, v = int(order[k]), int(order[rng.integers(0, k)])
        edges[(min(u, v), max(u, v))] = 1.0
    for _ in range(int(rng.integers(0, n + 1))):
        u, v = (int(t) for t in rng.choice(n, size=2, replace=False))
        edges[(min(u, v), max(u, v))] = 1.0
    if weighted:
        edges = {key: float(rng.uniform(0.5, 2.0)) for key in edges}
    g = AttributedGraph.from_edges(n, [(i, j, w) for (i, j), w in edges.items()],
                                   rng.normal(size=(n, feature_dim)))
    assert is_connected(g)
    return g


@pytest.fixture
def p3():
    return path3()


@pytest.fixture
def k3():
    return triangle()


@pytest.fixture
def s4():
    return star4()


@pytest.fixture
def disconnected4():
    return two_pairs()


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


LINEAR_TASK_WEIGHTS = np.array([1.0, -0.5, 2.0, 0.5, -1.0, 1.5])


def linear_task(rng, count, feature_dim=2, gamma=0.1):
    """
    Connected graphs labelled by a fixed linear functional of their mean-pooled
    (X1, X2, Xgamma) fingerprint, so a linear shallow model can fit them exactly.

    Returns:
        list of (graph_id, graph, label)
    """
    sel = ViewSelection.parse('x1,x2,xg', gamma)
    pools = PoolingSpec.parse('mean', 3)
    weights = LINEAR_TASK_WEIGHTS[:3 * feature_dim]
    items = []
    for k in range(count):
        n = int(rng.integers(3, 11))
        g = random_connected_graph(rng, n, feature_dim=feature_dim)
        g = g.with_features(rng.uniform(0.5, 1.5, size=(n, feature_dim)))
        label = float(fingerprint(g, sel, pools).values @ weights)
        items.append((f'g{k:03d}', g, label))
    return items


def linear_model_config(feature_dim=2, **overrides):
    settings = dict(views='x1,x2,xg', pooling='mean', hidden_dim=feature_dim, activation='identity',
                    graphnorm=False, task='regression', output_dim=1)
    settings.update(overrides)
    return ModelConfig(**settings)
