# features.py
"""
View selection, global pooling and fixed-size graph fingerprints.

A fingerprint concatenates, in the fixed order (X, X1, X2, Xgamma), the
pooled feature matrix of every selected view. X is pooled unscaled; the
walk views contribute their stationary-scaled features diag(pi_k) X.
"""

from dataclasses import dataclass
from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from utils.errors import DimensionMismatch, InvalidSelection, UnknownCategory
from utils.spectral import DEFAULT_GAMMA, check_gamma
from utils.walks import ViewBundle, WalkKind, build_view_bundle


class ViewName(str, Enum):
    X = 'x'
    X1 = 'x1'
    X2 = 'x2'
    XGAMMA = 'xg'


VIEW_ORDER = (ViewName.X, ViewName.X1, ViewName.X2, ViewName.XGAMMA)

VIEW_ALIASES = {
    'x': ViewName.X, 'x0': ViewName.X,
    'x1': ViewName.X1,
    'x2': ViewName.X2,
    'xg': ViewName.XGAMMA, 'xgamma': ViewName.XGAMMA, 'x_gamma': ViewName.XGAMMA,
}

VIEW_TO_WALK = {
    ViewName.X1: WalkKind.WALK1,
    ViewName.X2: WalkKind.WALK2,
    ViewName.XGAMMA: WalkKind.WALK_GAMMA,
}


class PoolingOp(str, Enum):
    MEAN = 'mean'
    SUM = 'sum'
    MAX = 'max'
    MEAN_SCALED_BY_MAX = 'mean_scaled_by_max'


POOLING_ALIASES = {
    'mean': PoolingOp.MEAN, 'avg': PoolingOp.MEAN, 'average': PoolingOp.MEAN,
    'sum': PoolingOp.SUM, 'add': PoolingOp.SUM,
    'max': PoolingOp.MAX,
    'mean_scaled_by_max': PoolingOp.MEAN_SCALED_BY_MAX, 'mean*max': PoolingOp.MEAN_SCALED_BY_MAX,
}


def parse_view_name(token) -> ViewName:
    if isinstance(token, ViewName):
        return token
    key = str(token).strip().lower()
    if key not in VIEW_ALIASES:
        raise InvalidSelection(f"unknown view '{token}' (expected one of x, x1, x2, xg)")
    return VIEW_ALIASES[key]


def parse_pooling_op(token) -> PoolingOp:
    if isinstance(token, PoolingOp):
        return token
    key = str(token).strip().lower()
    if key not in POOLING_ALIASES:
        raise InvalidSelection(f"unknown pooling operator '{token}' (expected mean, sum, max, mean_scaled_by_max)")
    return POOLING_ALIASES[key]


# ============================================
# SELECTION AND POOLING SPECS
# ============================================

@dataclass(frozen=True)
class ViewSelection:
    """Non-empty, duplicate-free subset of {X, X1, X2, Xgamma} in canonical order."""

    views: Tuple[ViewName, ...]
    gamma: float = DEFAULT_GAMMA

    def __post_init__(self):
        if not self.views:
            raise InvalidSelection("view selection is empty")
        if len(set(self.views)) != len(self.views):
            raise InvalidSelection("view selection has duplicates")
        if tuple(sorted(self.views, key=VIEW_ORDER.index)) != self.views:
            raise InvalidSelection("views must follow the order x, x1, x2, xg")
        check_gamma(self.gamma)

    @classmethod
    def parse(cls, spec, gamma: float = DEFAULT_GAMMA) -> 'ViewSelection':
        """Accept 'x1,x2,xg' or an iterable of names; returns canonical order."""
        tokens = spec.split(',') if isinstance(spec, str) else list(spec)
        names = [parse_view_name(t) for t in tokens if str(t).strip()]
        if len(set(names)) != len(names):
            raise InvalidSelection(f"view selection {spec!r} has duplicates")
        return cls(tuple(sorted(names, key=VIEW_ORDER.index)), float(gamma))

    @property
    def walk_kinds(self) -> Tuple[WalkKind, ...]:
        return tuple(VIEW_TO_WALK[v] for v in self.views if v in VIEW_TO_WALK)

    def names(self) -> List[str]:
        return [v.value for v in self.views]


@dataclass(frozen=True)
class PoolingSpec:
    """One ordered tuple of pooling operators per selected view."""

    ops: Tuple[Tuple[PoolingOp, ...], ...]

    def __post_init__(self):
        if not self.ops or any(not per_view for per_view in self.ops):
            raise InvalidSelection("every view needs at least one pooling operator")

    @classmethod
    def uniform(cls, op, view_count: int) -> 'PoolingSpec':
        return cls(tuple((parse_pooling_op(op),) for _ in range(view_count)))

    @classmethod
    def parse(cls, spec, view_count: int) -> 'PoolingSpec':
        """
        'mean'         same operator for every view
        'mean,max'     one operator per view
        'mean+max'     several operators, concatenated, for every view
        """
        if isinstance(spec, str):
            groups = [g.strip() for g in spec.split(',') if g.strip()]
        else:
            groups = list(spec)
        if not groups:
            raise InvalidSelection("pooling spec is empty")
        parsed = []
        for group in groups:
            members = group.split('+') if isinstance(group, str) else list(group)
            parsed.append(tuple(parse_pooling_op(m) for m in members))
        if len(parsed) == 1:
            parsed = parsed * view_count
        if len(parsed) != view_count:
            raise InvalidSelection(f"pooling spec names {len(parsed)} views, selection has {view_count}")
        return cls(tuple(parsed))

    def names(self) -> List[str]:
        return ['+'.join(op.value for op in per_view) for per_view in self.ops]


# ============================================
# POOLING
# ============================================

def pool(view_features: np.ndarray, op) -> np.ndarray:
    """
    Global pooling over the node axis.

    mean_scaled_by_max is the elementwise product of the column means and the
    column maxima.
    """
    op = parse_pooling_op(op)
    x = np.asarray(view_features, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionMismatch(f"pooling needs an n x h matrix with n >= 1, got shape {x.shape}")
    if op is PoolingOp.MEAN:
        return x.mean(axis=0)
    if op is PoolingOp.SUM:
        return x.sum(axis=0)
    if op is PoolingOp.MAX:
        return x.max(axis=0)
    return x.mean(axis=0) * x.max(axis=0)


# ============================================
# FINGERPRINTS
# ============================================

@dataclass(frozen=True, eq=False)
class Fingerprint:
    graph_id: str
    values: np.ndarray
    selection: ViewSelection
    pooling: PoolingSpec

    def to_record(self) -> Dict:
        return {
            'id': self.graph_id,
            'views': self.selection.names(),
            'pooling': self.pooling.names(),
            'gamma': self.selection.gamma,
            'values': [float(v) for v in self.values],
        }


def view_features(bundle: ViewBundle, view) -> np.ndarray:
    view = parse_view_name(view)
    if view is ViewName.X:
        return bundle.raw_features
    return bundle.view(VIEW_TO_WALK[view]).scaled_features


def fingerprint_length(sel: ViewSelection, pools: PoolingSpec, feature_dim: int) -> int:
    return sum(len(per_view) for per_view in pools.ops) * feature_dim


def fingerprint_bundle(bundle: ViewBundle, sel: ViewSelection, pools: PoolingSpec) -> Fingerprint:
    if len(pools.ops) != len(sel.views):
        raise InvalidSelection(f"pooling spec has {len(pools.ops)} entries for {len(sel.views)} views")
    parts = []
    for view, per_view in zip(sel.views, pools.ops):
        matrix = view_features(bundle, view)
        parts.extend(pool(matrix, op) for op in per_view)
    return Fingerprint(bundle.graph_id, np.concatenate(parts), sel, pools)


def fingerprint(g, sel: ViewSelection, pools: PoolingSpec, graph_id: str = '') -> Fingerprint:
    """
    Pooled, concatenated vector embedding of one graph.

    Args:
        g: repaired, connected AttributedGraph
        sel: selected views and gamma
        pools: pooling operators per selected view
        graph_id: provenance carried into the result
    """
    bundle = build_view_bundle(graph_id, g, sel.walk_kinds, sel.gamma)
    return fingerprint_bundle(bundle, sel, pools)


# ============================================
# ONE-HOT ENCODING
# ============================================

def build_vocabulary(categoricals: Iterable[Mapping[str, Sequence]]) -> Dict[str, List]:
    """Sorted union of observed values per attribute, attributes sorted by name."""
    seen: Dict[str, set] = {}
    for categorical in categoricals:
        for attribute, values in (categorical or {}).items():
            seen.setdefault(attribute, set()).update(values)
    return {
        attribute: sorted(values, key=lambda v: (type(v).__name__, str(v)))
        for attribute, values in sorted(seen.items())
    }


def one_hot_encode(categorical: Mapping[str, Sequence], vocabulary: Mapping[str, Sequence],
                   node_count: Optional[int] = None) -> np.ndarray:
    """
    Encode per-node categorical attributes as concatenated one-hot blocks.

    Args:
        categorical: attribute -> list of per-node values
        vocabulary: attribute -> ordered list of admissible values; block order
            follows this mapping
        node_count: expected number of nodes (inferred when omitted)

    Raises:
        UnknownCategory: a value is missing from its attribute's vocabulary
    """
    blocks = []
    for attribute, choices in vocabulary.items():
        if attribute not in categorical:
            raise DimensionMismatch(f"categorical attribute '{attribute}' is missing")
        values = list(categorical[attribute])
        if node_count is None:
            node_count = len(values)
        if len(values) != node_count:
            raise DimensionMismatch(f"attribute '{attribute}' has {len(values)} values for {node_count} nodes")
        index = {choice: k for k, choice in enumerate(choices)}
        block = np.zeros((node_count, len(choices)), dtype=np.float64)
        for row, value in enumerate(values):
            if value not in index:
                raise UnknownCategory(value, attribute)
            block[row, index[value]] = 1.0
        blocks.append(block)
    if not blocks:
        return np.zeros((node_count or 0, 0), dtype=np.float64)
    return np.hstack(blocks)
