"""View selection, pooling, fingerprints and one-hot encoding."""

import numpy as np
import pytest
from pytest import approx

from conftest import random_connected_graph
from utils.errors import DimensionMismatch, GammaOutOfRange, InvalidSelection, UnknownCategory
from utils.graph_core import permute_graph
from utils.features import (
    PoolingOp, PoolingSpec, ViewName, ViewSelection, build_vocabulary, fingerprint,
    fingerprint_length, one_hot_encode, pool
)

P3_X1 = np.array([[0.25], [0.5], [0.25]])


class TestViewSelection:
    def test_parse_sorts_into_canonical_order(self):
        sel = ViewSelection.parse('xg,x1', 0.2)
        assert sel.views == (ViewName.X1, ViewName.XGAMMA)
        assert sel.gamma == 0.2

    def test_aliases(self):
        assert ViewSelection.parse(['x0', 'xgamma']).names() == ['x', 'xg']

    def test_duplicates(self):
        with pytest.raises(InvalidSelection):
            ViewSelection.parse('x1,x1')

    def test_empty(self):
        with pytest.raises(InvalidSelection):
            ViewSelection.parse('')

    def test_unknown_view(self):
        with pytest.raises(InvalidSelection):
            ViewSelection.parse('x3')

    def test_gamma_checked(self):
        with pytest.raises(GammaOutOfRange):
            ViewSelection.parse('x1', 1.5)

    def test_raw_view_needs_no_walk(self):
        assert ViewSelection.parse('x').walk_kinds == ()


class TestPoolingSpec:
    def test_single_operator_applies_to_every_view(self):
        assert PoolingSpec.parse('mean', 3).ops == ((PoolingOp.MEAN,),) * 3

    def test_per_view_operators(self):
        spec = PoolingSpec.parse('mean,max', 2)
        assert spec.ops == ((PoolingOp.MEAN,), (PoolingOp.MAX,))

    def test_several_operators_per_view(self):
        spec = PoolingSpec.parse('mean+max', 2)
        assert spec.names() == ['mean+max', 'mean+max']

    def test_count_mismatch(self):
        with pytest.raises(InvalidSelection):
            PoolingSpec.parse('mean,max', 3)

    def test_unknown_operator(self):
        with pytest.raises(InvalidSelection):
            PoolingSpec.parse('bogus', 1)


class TestPool:
    def test_mean(self):
        assert pool(P3_X1, 'mean') == approx([1 / 3])

    def test_max(self):
        assert pool(P3_X1, 'max') == approx([0.5])

    def test_mean_scaled_by_max(self):
        assert pool(P3_X1, 'mean_scaled_by_max') == approx([1 / 6])

    def test_sum(self):
        assert pool(P3_X1, PoolingOp.SUM) == approx([1.0])

    def test_empty_matrix(self):
        with pytest.raises(DimensionMismatch):
            pool(np.zeros((0, 2)), 'mean')

    def test_sum_is_additive_over_disjoint_unions(self, rng):
        for _ in range(20):
            a = rng.normal(size=(int(rng.integers(1, 8)), 3))
            b = rng.normal(size=(int(rng.integers(1, 8)), 3))
            assert pool(np.vstack([a, b]), 'sum') == approx(pool(a, 'sum') + pool(b, 'sum'), abs=1e-12)


class TestFingerprint:
    def test_triangle_walk1_mean(self, k3):
        fp = fingerprint(k3, ViewSelection.parse('x1'), PoolingSpec.parse('mean', 1), 'k3')
        assert fp.values == approx([1 / 3])
        assert fp.to_record()['id'] == 'k3'

    def test_path_two_views(self, p3):
        fp = fingerprint(p3, ViewSelection.parse('x1,x2'), PoolingSpec.parse('mean', 2))
        assert fp.values == approx([1 / 3, 1 / 3])

    def test_raw_view_is_unscaled(self, p3):
        g = p3.with_features([[1.0], [2.0], [6.0]])
        fp = fingerprint(g, ViewSelection.parse('x,x1'), PoolingSpec.parse('max', 2))
        assert fp.values == approx([6.0, 1.5])

    def test_length(self, rng):
        g = random_connected_graph(rng, 6, feature_dim=4)
        sel = ViewSelection.parse('x,x1,x2,xg')
        pools = PoolingSpec.parse('mean+max,sum,mean,max', 4)
        fp = fingerprint(g, sel, pools)
        assert fp.values.shape == (fingerprint_length(sel, pools, 4),) == (20,)

    def test_invariant_under_relabelling(self, rng):
        sel = ViewSelection.parse('x,x1,x2,xg', 0.1)
        pools = PoolingSpec.parse('mean+max+sum+mean_scaled_by_max', 4)
        g = random_connected_graph(rng, 8, weighted=True, feature_dim=3)
        base = fingerprint(g, sel, pools).values
        for _ in range(20):
            moved = fingerprint(permute_graph(g, rng.permutation(8)), sel, pools).values
            assert np.max(np.abs(moved - base)) < 1e-12

    def test_constant_features_mean_pool_to_c_over_n(self, rng):
        sel = ViewSelection.parse('x1,x2,xg', 0.1)
        pools = PoolingSpec.parse('mean', 3)
        for _ in range(20):
            n = int(rng.integers(3, 12))
            g = random_connected_graph(rng, n, weighted=bool(rng.integers(0, 2)))
            g = g.with_features(np.full((n, 2), 2.5))
            assert fingerprint(g, sel, pools).values == approx([2.5 / n] * 6, abs=1e-10)


class TestOneHot:
    VOCAB = {'element': ['C', 'N', 'O']}

    def test_encoding(self):
        x = one_hot_encode({'element': ['C', 'O']}, self.VOCAB)
        assert np.array_equal(x, [[1, 0, 0], [0, 0, 1]])

    def test_unknown_value(self):
        with pytest.raises(UnknownCategory):
            one_hot_encode({'element': ['S']}, self.VOCAB)

    def test_blocks_concatenate_in_vocabulary_order(self):
        vocab = {'charge': [-1, 0, 1], 'element': ['C', 'N']}
        x = one_hot_encode({'element': ['N'], 'charge': [1]}, vocab)
        assert np.array_equal(x, [[0, 0, 1, 0, 1]])

    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            one_hot_encode({'element': ['C']}, self.VOCAB, node_count=2)

    def test_vocabulary_is_sorted_union(self):
        vocab = build_vocabulary([{'element': ['O', 'C']}, {'element': ['N'], 'charge': [0, -1]}])
        assert vocab == {'charge': [-1, 0], 'element': ['C', 'N', 'O']}
