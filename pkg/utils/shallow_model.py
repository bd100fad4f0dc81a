# shallow_model.py
"""
Shallow trainable head on top of the walk views.

For every selected view the node matrix goes through

    linear embed (shared) -> GraphNorm (per view, optional) -> activation -> pooling

and the pooled vectors are concatenated and fed to a linear prediction
head. Graphs are processed in batches: node rows of all graphs in a batch
are stacked and every per-graph statistic is a segment reduction over the
stacked rows (np.add.reduceat), so forward and backward are plain numpy.
"""

import copy
from collections import OrderedDict
from dataclasses import dataclass
from typing import Dict, List, Literal, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from utils.errors import DimensionMismatch, EmptyEnsemble, NonFiniteLoss
from utils.features import (
    PoolingOp, PoolingSpec, ViewName, ViewSelection, view_features
)
from utils.spectral import DEFAULT_GAMMA

GRAPHNORM_EPS = 1e-5

LOSSES = ('mse', 'bce_with_logits')


# ============================================
# CONFIGURATION
# ============================================

class ModelConfig(BaseModel):
    """Architecture of the shallow head. Unknown keys are rejected."""

    model_config = ConfigDict(extra='forbid')

    views: List[str] = Field(default_factory=lambda: ['x1', 'x2', 'xg'])
    pooling: str = 'mean'
    gamma: float = Field(DEFAULT_GAMMA, gt=0.0, le=1.0)
    hidden_dim: int = Field(300, ge=1)
    activation: Literal['relu', 'tanh', 'sigmoid', 'identity'] = 'relu'
    graphnorm: bool = True
    task: Literal['regression', 'binary_classification'] = 'regression'
    output_dim: int = Field(1, ge=1)

    @field_validator('views', mode='before')
    @classmethod
    def _split_views(cls, value):
        if isinstance(value, str):
            return [v.strip() for v in value.split(',') if v.strip()]
        return value

    def selection(self) -> ViewSelection:
        return ViewSelection.parse(self.views, self.gamma)

    def pooling_spec(self) -> PoolingSpec:
        return PoolingSpec.parse(self.pooling, len(self.selection().views))


# ============================================
# BATCHES
# ============================================

def view_matrices(bundle, selection: ViewSelection) -> Dict[ViewName, np.ndarray]:
    """Per selected view, the node matrix the model consumes (X raw, walk views scaled)."""
    return {view: view_features(bundle, view) for view in selection.views}


@dataclass(frozen=True, eq=False)
class GraphBatch:
    """Node rows of several graphs stacked per view, with segment bookkeeping."""

    matrices: Dict[ViewName, np.ndarray]
    starts: np.ndarray
    counts: np.ndarray
    labels: Optional[np.ndarray] = None

    @property
    def size(self) -> int:
        return int(self.counts.shape[0])

    @property
    def segments(self) -> np.ndarray:
        return np.repeat(np.arange(self.size), self.counts)

    @classmethod
    def from_matrices(cls, per_graph: Sequence[Dict[ViewName, np.ndarray]], labels=None) -> 'GraphBatch':
        if not per_graph:
            raise DimensionMismatch("batch is empty")
        views = list(per_graph[0].keys())
        counts = np.array([next(iter(m.values())).shape[0] for m in per_graph], dtype=np.int64)
        if np.any(counts < 1):
            raise DimensionMismatch("every graph in a batch needs at least one node")
        starts = np.concatenate([[0], np.cumsum(counts)[:-1]]).astype(np.int64)
        stacked = {}
        for view in views:
            blocks = [m[view] for m in per_graph]
            if any(b.shape[0] != c for b, c in zip(blocks, counts)):
                raise DimensionMismatch(f"view {view.value} has inconsistent node counts")
            stacked[view] = np.vstack(blocks)
        if labels is not None:
            labels = np.asarray(labels, dtype=np.float64)
            if labels.ndim == 1:
                labels = labels.reshape(-1, 1)
            if labels.shape[0] != len(per_graph):
                raise DimensionMismatch(f"{labels.shape[0]} label rows for {len(per_graph)} graphs")
        return cls(stacked, starts, counts, labels)

    @classmethod
    def from_bundles(cls, bundles, selection: ViewSelection, labels=None) -> 'GraphBatch':
        return cls.from_matrices([view_matrices(b, selection) for b in bundles], labels)


def _segment_sum(x: np.ndarray, starts: np.ndarray) -> np.ndarray:
    return np.add.reduceat(x, starts, axis=0)


def _segment_argmax(x: np.ndarray, starts: np.ndarray, counts: np.ndarray) -> np.ndarray:
    """Global row index of the first maximum, per segment and column."""
    rows = np.empty((starts.shape[0], x.shape[1]), dtype=np.int64)
    for b, (s, c) in enumerate(zip(starts, counts)):
        rows[b] = s + np.argmax(x[s:s + c], axis=0)
    return rows


# ============================================
# BUILDING BLOCKS
# ============================================

def graphnorm(x, gamma, beta, alpha, eps: float = GRAPHNORM_EPS) -> np.ndarray:
    """
    GraphNorm over the nodes of one graph.

    out = gamma * (x - alpha * mu) / sqrt(sigma^2 + eps) + beta, where mu is the
    column mean of x and sigma^2 the column mean of (x - alpha * mu)^2.

    Args:
        x: n x h node matrix, n >= 1
        gamma, beta, alpha: length-h parameter vectors
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DimensionMismatch(f"graphnorm needs an n x h matrix with n >= 1, got shape {x.shape}")
    shifted = x - alpha * x.mean(axis=0)
    variance = np.mean(shifted * shifted, axis=0)
    return gamma * shifted / np.sqrt(variance + eps) + beta


def _activate(name: str, y: np.ndarray) -> np.ndarray:
    if name == 'relu':
        return np.maximum(y, 0.0)
    if name == 'tanh':
        return np.tanh(y)
    if name == 'sigmoid':
        return 0.5 * (1.0 + np.tanh(0.5 * y))
    return y


def _activation_grad(name: str, y: np.ndarray, h: np.ndarray) -> np.ndarray:
    if name == 'relu':
        return (y > 0).astype(np.float64)
    if name == 'tanh':
        return 1.0 - h * h
    if name == 'sigmoid':
        return h * (1.0 - h)
    return np.ones_like(y)


# ============================================
# MODEL
# ============================================

class ShallowModel:
    """
    Parameters live in an ordered name -> array mapping:

        embed.weight (h x c), embed.bias (h)
        norm.<view>.gamma / .beta / .alpha (h)   only with GraphNorm
        head.weight (T x P), head.bias (T)       P = h * number of pooling ops
    """

    def __init__(self, config: ModelConfig, feature_dim: int, params: Dict[str, np.ndarray]):
        self.config = config
        self.feature_dim = int(feature_dim)
        self.selection = config.selection()
        self.pooling = config.pooling_spec()
        self.params = OrderedDict(params)
        self._check_shapes()

    # ---------- construction ----------

    @classmethod
    def parameter_shapes(cls, config: ModelConfig, feature_dim: int) -> 'OrderedDict[str, Tuple[int, ...]]':
        h = config.hidden_dim
        sel = config.selection()
        pools = config.pooling_spec()
        pooled = h * sum(len(ops) for ops in pools.ops)
        shapes = OrderedDict()
        shapes['embed.weight'] = (h, int(feature_dim))
        shapes['embed.bias'] = (h,)
        if config.graphnorm:
            for view in sel.views:
                for part in ('gamma', 'beta', 'alpha'):
                    shapes[f'norm.{view.value}.{part}'] = (h,)
        shapes['head.weight'] = (config.output_dim, pooled)
        shapes['head.bias'] = (config.output_dim,)
        return shapes

    @classmethod
    def initialize(cls, config: ModelConfig, feature_dim: int, seed: int) -> 'ShallowModel':
        """Weights uniform in +-1/sqrt(fan_in), biases 0, GraphNorm gamma = alpha = 1, beta = 0."""
        rng = np.random.default_rng(seed)
        params = OrderedDict()
        for name, shape in cls.parameter_shapes(config, feature_dim).items():
            if name.endswith('.weight'):
                bound = 1.0 / np.sqrt(shape[1])
                params[name] = rng.uniform(-bound, bound, size=shape)
            elif name.endswith('.gamma') or name.endswith('.alpha'):
                params[name] = np.ones(shape)
            else:
                params[name] = np.zeros(shape)
        return cls(config, feature_dim, params)

    def _check_shapes(self) -> None:
        expected = self.parameter_shapes(self.config, self.feature_dim)
        if list(expected) != list(self.params):
            raise DimensionMismatch(
                f"parameter names {list(self.params)} do not match configuration {list(expected)}"
            )
        for name, shape in expected.items():
            value = np.asarray(self.params[name], dtype=np.float64)
            if value.shape != shape:
                raise DimensionMismatch(f"parameter {name} has shape {value.shape}, configuration needs {shape}")
            if not np.all(np.isfinite(value)):
                raise DimensionMismatch(f"parameter {name} has non-finite entries")
            self.params[name] = value

    def copy(self) -> 'ShallowModel':
        return ShallowModel(self.config, self.feature_dim, copy.deepcopy(self.params))

    def with_params(self, params: Dict[str, np.ndarray]) -> 'ShallowModel':
        return ShallowModel(self.config, self.feature_dim, params)

    def same_architecture(self, other: 'ShallowModel') -> bool:
        return self.config == other.config and self.feature_dim == other.feature_dim

    # ---------- forward ----------

    def _check_batch(self, batch: GraphBatch) -> None:
        for view in self.selection.views:
            if view not in batch.matrices:
                raise DimensionMismatch(f"batch has no '{view.value}' view")
            dim = batch.matrices[view].shape[1]
            if dim != self.feature_dim:
                raise DimensionMismatch(f"view '{view.value}' has feature dim {dim}, model expects {self.feature_dim}")

    def forward_batch(self, batch: GraphBatch, keep_cache: bool = False):
        """
        Returns:
            B x T predictions, plus the backward cache when keep_cache is set
        """
        self._check_batch(batch)
        p = self.params
        act = self.config.activation
        starts, counts = batch.starts, batch.counts
        seg = batch.segments
        pooled_parts = []
        caches = []

        for view, ops in zip(self.selection.views, self.pooling.ops):
            f = batch.matrices[view]
            z = f @ p['embed.weight'].T + p['embed.bias']
            cache = {'view': view, 'ops': ops, 'f': f}
            if self.config.graphnorm:
                key = f'norm.{view.value}'
                mu = _segment_sum(z, starts) / counts[:, None]
                s = z - p[f'{key}.alpha'] * mu[seg]
                variance = _segment_sum(s * s, starts) / counts[:, None]
                r = 1.0 / np.sqrt(variance + GRAPHNORM_EPS)
                s_hat = s * r[seg]
                y = p[f'{key}.gamma'] * s_hat + p[f'{key}.beta']
                cache.update(mu=mu, s=s, r=r, s_hat=s_hat)
            else:
                y = z
            h = _activate(act, y)
            cache.update(y=y, h=h)

            mean = argmax = maxima = None
            for op in ops:
                if op in (PoolingOp.MEAN, PoolingOp.MEAN_SCALED_BY_MAX) and mean is None:
                    mean = _segment_sum(h, starts) / counts[:, None]
                if op in (PoolingOp.MAX, PoolingOp.MEAN_SCALED_BY_MAX) and maxima is None:
                    argmax = _segment_argmax(h, starts, counts)
                    maxima = h[argmax, np.arange(h.shape[1])]
                if op is PoolingOp.MEAN:
                    pooled_parts.append(mean)
                elif op is PoolingOp.SUM:
                    pooled_parts.append(_segment_sum(h, starts))
                elif op is PoolingOp.MAX:
                    pooled_parts.append(maxima)
                else:
                    pooled_parts.append(mean * maxima)
            cache.update(mean=mean, maxima=maxima, argmax=argmax)
            caches.append(cache)

        pooled = np.hstack(pooled_parts)
        out = pooled @ p['head.weight'].T + p['head.bias']
        if keep_cache:
            return out, {'pooled': pooled, 'views': caches}
        return out

    def predict_batch(self, batch: GraphBatch) -> np.ndarray:
        return self.forward_batch(batch)

    def forward(self, bundle) -> np.ndarray:
        """Prediction vector (length T) for one graph bundle."""
        batch = GraphBatch.from_bundles([bundle], self.selection)
        return self.forward_batch(batch)[0]

    # ---------- backward ----------

    def backward(self, batch: GraphBatch, cache, d_out: np.ndarray) -> Dict[str, np.ndarray]:
        p = self.params
        act = self.config.activation
        starts, counts = batch.starts, batch.counts
        seg = batch.segments
        grads = OrderedDict((name, np.zeros_like(value)) for name, value in p.items())
        hidden = self.config.hidden_dim

        grads['head.weight'] = d_out.T @ cache['pooled']
        grads['head.bias'] = d_out.sum(axis=0)
        d_pooled = d_out @ p['head.weight']

        offset = 0
        for vc in cache['views']:
            h = vc['h']
            cols = np.broadcast_to(np.arange(hidden), vc['argmax'].shape) if vc['argmax'] is not None else None
            d_h = np.zeros_like(h)
            for op in vc['ops']:
                dp = d_pooled[:, offset:offset + hidden]
                offset += hidden
                if op is PoolingOp.MEAN:
                    d_h += (dp / counts[:, None])[seg]
                elif op is PoolingOp.SUM:
                    d_h += dp[seg]
                elif op is PoolingOp.MAX:
                    np.add.at(d_h, (vc['argmax'], cols), dp)
                else:
                    d_h += (dp * vc['maxima'] / counts[:, None])[seg]
                    np.add.at(d_h, (vc['argmax'], cols), dp * vc['mean'])

            d_y = d_h * _activation_grad(act, vc['y'], h)

            if self.config.graphnorm:
                key = f"norm.{vc['view'].value}"
                s, s_hat, r, mu = vc['s'], vc['s_hat'], vc['r'], vc['mu']
                grads[f'{key}.gamma'] = np.sum(d_y * s_hat, axis=0)
                grads[f'{key}.beta'] = np.sum(d_y, axis=0)
                d_s_hat = d_y * p[f'{key}.gamma']
                inner = _segment_sum(d_s_hat * s, starts)
                d_s = d_s_hat * r[seg] - ((r ** 3 / counts[:, None]) * inner)[seg] * s
                seg_d_s = _segment_sum(d_s, starts)
                grads[f'{key}.alpha'] = -np.sum(mu * seg_d_s, axis=0)
                d_z = d_s - (p[f'{key}.alpha'] * seg_d_s / counts[:, None])[seg]
            else:
                d_z = d_y

            grads['embed.weight'] += d_z.T @ vc['f']
            grads['embed.bias'] += d_z.sum(axis=0)
        return grads

    # ---------- state ----------

    def to_state(self) -> Dict[str, np.ndarray]:
        return OrderedDict((name, value.copy()) for name, value in self.params.items())

    @classmethod
    def from_state(cls, config: ModelConfig, feature_dim: int, state: Dict[str, np.ndarray]) -> 'ShallowModel':
        return cls(config, feature_dim, OrderedDict((k, np.array(v, dtype=np.float64)) for k, v in state.items()))


# ============================================
# LOSSES
# ============================================

def compute_loss(predictions: np.ndarray, labels: np.ndarray, loss: str) -> Tuple[float, np.ndarray]:
    """
    Masked mean loss over observed (graph, task) entries and its gradient
    with respect to the predictions. NaN labels are missing.
    """
    labels = np.asarray(labels, dtype=np.float64).reshape(predictions.shape)
    mask = ~np.isnan(labels)
    count = int(mask.sum())
    if count == 0:
        return 0.0, np.zeros_like(predictions)
    y = np.where(mask, labels, 0.0)
    if loss == 'mse':
        diff = np.where(mask, predictions - y, 0.0)
        value = float(np.sum(diff * diff) / count)
        grad = 2.0 * diff / count
    elif loss == 'bce_with_logits':
        z = predictions
        per_entry = np.maximum(z, 0.0) - y * z + np.log1p(np.exp(-np.abs(z)))
        value = float(np.sum(np.where(mask, per_entry, 0.0)) / count)
        prob = 0.5 * (1.0 + np.tanh(0.5 * z))
        grad = np.where(mask, prob - y, 0.0) / count
    else:
        raise ValueError(f"unknown loss '{loss}' (expected one of {LOSSES})")
    if not np.isfinite(value):
        raise NonFiniteLoss(value)
    return value, grad


def loss_and_gradients(batch: GraphBatch, model: ShallowModel, loss: str) -> Tuple[float, Dict[str, np.ndarray]]:
    """
    Mean batch loss and exact gradients for every parameter.

    Args:
        batch: GraphBatch carrying labels (B x T, NaN = missing)
        model: ShallowModel
        loss: 'mse' or 'bce_with_logits'

    Raises:
        NonFiniteLoss: loss evaluates to NaN or inf
    """
    if batch.labels is None:
        raise DimensionMismatch("loss needs a labelled batch")
    if batch.labels.shape[1] != model.config.output_dim:
        raise DimensionMismatch(
            f"labels have {batch.labels.shape[1]} tasks, model predicts {model.config.output_dim}"
        )
    predictions, cache = model.forward_batch(batch, keep_cache=True)
    value, d_out = compute_loss(predictions, batch.labels, loss)
    return value, model.backward(batch, cache, d_out)


def numerical_gradients(batch: GraphBatch, model: ShallowModel, loss: str,
                        step: float = 1e-5) -> Dict[str, np.ndarray]:
    """Central finite differences of the batch loss; only for gradient checks."""
    grads = OrderedDict()
    for name, value in model.params.items():
        g = np.zeros_like(value)
        flat = value.reshape(-1)
        out = g.reshape(-1)
        for k in range(flat.size):
            original = flat[k]
            flat[k] = original + step
            plus = compute_loss(model.forward_batch(batch), batch.labels, loss)[0]
            flat[k] = original - step
            minus = compute_loss(model.forward_batch(batch), batch.labels, loss)[0]
            flat[k] = original
            out[k] = (plus - minus) / (2.0 * step)
        grads[name] = g
    return grads


# ============================================
# ENSEMBLES
# ============================================

def ensemble_predict_batch(models: Sequence[ShallowModel], batch: GraphBatch) -> np.ndarray:
    if not models:
        raise EmptyEnsemble()
    first = models[0]
    for other in models[1:]:
        if not first.same_architecture(other):
            raise DimensionMismatch("ensemble members do not share one configuration")
    total = np.zeros((batch.size, first.config.output_dim))
    for model in models:
        total += model.predict_batch(batch)
    return total / len(models)


def ensemble_predict(models: Sequence[ShallowModel], bundle) -> np.ndarray:
    """Arithmetic mean of the member predictions (raw outputs, logits for classification)."""
    if not models:
        raise EmptyEnsemble()
    batch = GraphBatch.from_bundles([bundle], models[0].selection)
    return ensemble_predict_batch(models, batch)[0]
