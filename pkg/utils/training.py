# training.py
"""
Mini-batch training of the shallow head: Adam / AdamW, step and plateau
learning-rate schedules, per-epoch metric history.

Training is deterministic given (seed, data, config): the parameter init
uses default_rng(seed) and the shuffle order a separate stream derived from
the same seed.
"""

import time
from dataclasses import dataclass, field
from typing import Dict, List, Literal, Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from utils.errors import DegenerateLabels, DimensionMismatch, NonFiniteLoss
from utils.features import ViewName, ViewSelection
from utils.metrics import evaluate_predictions
from utils.shallow_model import (
    GraphBatch, ShallowModel, compute_loss, ensemble_predict_batch, loss_and_gradients, view_matrices
)

SHUFFLE_STREAM = 1


class TrainConfig(BaseModel):
    """Optimisation settings. learning_rate = 0 is accepted and freezes the parameters."""

    model_config = ConfigDict(extra='forbid')

    learning_rate: float = Field(0.001, ge=0.0)
    epochs: int = Field(100, ge=1)
    batch_size: int = Field(32, ge=1)
    seed: int = 0
    optimizer: Literal['adam', 'adamw'] = 'adam'
    scheduler: Literal['none', 'step', 'plateau'] = 'none'
    loss: Literal['mse', 'bce_with_logits'] = 'mse'
    weight_decay: float = Field(0.01, ge=0.0)
    beta1: float = Field(0.9, ge=0.0, lt=1.0)
    beta2: float = Field(0.999, ge=0.0, lt=1.0)
    adam_eps: float = Field(1e-8, gt=0.0)
    step_size: int = Field(50, ge=1)
    step_factor: float = Field(0.5, gt=0.0, le=1.0)
    plateau_factor: float = Field(0.5, gt=0.0, lt=1.0)
    plateau_patience: int = Field(10, ge=1)
    min_lr: float = Field(0.0, ge=0.0)
    eval_batch_size: int = Field(256, ge=1)


# ============================================
# DATASETS
# ============================================

@dataclass(eq=False)
class GraphDataset:
    """Model-ready node matrices of a set of graphs, with their labels (N x T, NaN = missing)."""

    ids: List[str]
    matrices: List[Dict[ViewName, np.ndarray]]
    labels: np.ndarray
    split: str = ''

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.labels.ndim == 1:
            self.labels = self.labels.reshape(-1, 1)
        if not (len(self.ids) == len(self.matrices) == self.labels.shape[0]):
            raise DimensionMismatch(
                f"dataset has {len(self.ids)} ids, {len(self.matrices)} graphs and {self.labels.shape[0]} label rows"
            )

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def task_count(self) -> int:
        return int(self.labels.shape[1])

    @property
    def feature_dim(self) -> int:
        if not self.matrices:
            return 0
        return int(next(iter(self.matrices[0].values())).shape[1])

    @classmethod
    def from_bundles(cls, bundles: Sequence, labels, selection: ViewSelection, split: str = '') -> 'GraphDataset':
        return cls(
            ids=[b.graph_id for b in bundles],
            matrices=[view_matrices(b, selection) for b in bundles],
            labels=labels if len(bundles) else np.zeros((0, 1)),
            split=split,
        )

    def batch(self, indices) -> GraphBatch:
        indices = list(indices)
        return GraphBatch.from_matrices([self.matrices[i] for i in indices], self.labels[indices])

    def batches(self, size: int):
        for start in range(0, len(self), size):
            yield self.batch(range(start, min(start + size, len(self))))


def predict(models: Sequence[ShallowModel], dataset: GraphDataset, batch_size: int = 256) -> np.ndarray:
    """Ensemble-mean raw outputs for every graph of the dataset (N x T)."""
    if len(dataset) == 0:
        return np.zeros((0, models[0].config.output_dim if models else 1))
    return np.vstack([ensemble_predict_batch(models, b) for b in dataset.batches(batch_size)])


# ============================================
# OPTIMIZERS
# ============================================

class Adam:
    """
    Adam over a name -> array parameter mapping.

    With decoupled_weight_decay > 0 this is AdamW: weights (not biases or
    norm parameters) additionally shrink by lr * decay * W each step.
    """

    def __init__(self, params: Dict[str, np.ndarray], lr: float, beta1: float = 0.9, beta2: float = 0.999,
                 eps: float = 1e-8, decoupled_weight_decay: float = 0.0):
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = decoupled_weight_decay
        self.t = 0
        self.m = {name: np.zeros_like(value) for name, value in params.items()}
        self.v = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, params: Dict[str, np.ndarray], grads: Dict[str, np.ndarray]) -> None:
        self.t += 1
        correction1 = 1 - self.beta1 ** self.t
        correction2 = 1 - self.beta2 ** self.t
        for name, value in params.items():
            g = grads[name]
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * g
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * (g * g)
            m_hat = self.m[name] / correction1
            v_hat = self.v[name] / correction2
            update = m_hat / (np.sqrt(v_hat) + self.eps)
            if self.weight_decay and name.endswith('.weight'):
                update = update + self.weight_decay * value
            value -= self.lr * update


def make_optimizer(params, config: TrainConfig) -> Adam:
    decay = config.weight_decay if config.optimizer == 'adamw' else 0.0
    return Adam(params, config.learning_rate, config.beta1, config.beta2, config.adam_eps, decay)


class StepLR:
    """Multiply lr by factor every step_size epochs."""

    def __init__(self, optimizer: Adam, step_size: int, factor: float):
        self.optimizer = optimizer
        self.step_size = step_size
        self.factor = factor
        self.epoch = 0

    def step(self, current: Optional[float] = None) -> None:
        self.epoch += 1
        if self.epoch % self.step_size == 0:
            self.optimizer.lr *= self.factor


class ReduceLROnPlateau:
    """Reduce lr when the monitored loss has not improved for `patience` epochs."""

    def __init__(self, optimizer: Adam, factor: float = 0.5, patience: int = 10,
                 min_lr: float = 0.0, verbose: bool = False):
        self.optimizer = optimizer
        self.factor = factor
        self.patience = patience
        self.min_lr = min_lr
        self.verbose = verbose
        self.best = float('inf')
        self.num_bad = 0

    def step(self, current: Optional[float] = None) -> None:
        if current is None or not np.isfinite(current):
            return
        if current < self.best - 1e-12:
            self.best = current
            self.num_bad = 0
            return
        self.num_bad += 1
        if self.num_bad >= self.patience:
            self.optimizer.lr = max(self.optimizer.lr * self.factor, self.min_lr)
            self.num_bad = 0
            if self.verbose:
                print(f"🔧 Plateau reached, learning rate -> {self.optimizer.lr:.3e}")


class _NoSchedule:
    def step(self, current: Optional[float] = None) -> None:
        return None


def make_scheduler(optimizer: Adam, config: TrainConfig, verbose: bool = False):
    if config.scheduler == 'step':
        return StepLR(optimizer, config.step_size, config.step_factor)
    if config.scheduler == 'plateau':
        return ReduceLROnPlateau(optimizer, config.plateau_factor, config.plateau_patience,
                                 config.min_lr, verbose)
    return _NoSchedule()


# ============================================
# TRAINING LOOP
# ============================================

@dataclass(eq=False)
class TrainResult:
    model: ShallowModel
    history: List[Dict[str, float]] = field(default_factory=list)
    wall_time: float = 0.0

    @property
    def final(self) -> Dict[str, float]:
        return self.history[-1] if self.history else {}


def _split_report(model: ShallowModel, dataset: GraphDataset, config: TrainConfig, prefix: str) -> Dict[str, float]:
    predictions = predict([model], dataset, config.eval_batch_size)
    loss, _ = compute_loss(predictions, dataset.labels, config.loss)
    report = {f'{prefix}_loss': loss}
    try:
        metrics = evaluate_predictions(predictions, dataset.labels, model.config.task)
    except DegenerateLabels:
        metrics = {}
    report.update({f'{prefix}_{name}': value for name, value in metrics.items()})
    return report


def train(train_set: GraphDataset, model: ShallowModel, config: TrainConfig,
          valid_set: Optional[GraphDataset] = None, verbose: bool = False) -> TrainResult:
    """
    Fit a copy of `model` on train_set.

    Args:
        train_set: labelled training graphs
        model: initialised ShallowModel (left untouched)
        config: TrainConfig
        valid_set: optional validation graphs, drives the plateau schedule
        verbose: print one line per epoch

    Returns:
        TrainResult with the trained model and one history row per epoch
        (epoch, lr, train_loss, valid_loss, valid_<metric>...)

    Raises:
        NonFiniteLoss: with epoch and batch context
    """
    if len(train_set) == 0:
        raise DimensionMismatch("training set is empty")
    if train_set.task_count != model.config.output_dim:
        raise DimensionMismatch(
            f"labels have {train_set.task_count} tasks, model predicts {model.config.output_dim}"
        )
    started = time.perf_counter()
    work = model.copy()
    optimizer = make_optimizer(work.params, config)
    scheduler = make_scheduler(optimizer, config, verbose)
    rng = np.random.default_rng([config.seed, SHUFFLE_STREAM])
    history = []

    for epoch in range(1, config.epochs + 1):
        lr = optimizer.lr
        order = rng.permutation(len(train_set))
        total, seen = 0.0, 0
        for batch_index, start in enumerate(range(0, len(order), config.batch_size)):
            batch = train_set.batch(order[start:start + config.batch_size])
            try:
                loss, grads = loss_and_gradients(batch, work, config.loss)
            except NonFiniteLoss as e:
                raise NonFiniteLoss(e.loss, epoch, batch_index) from e
            optimizer.step(work.params, grads)
            total += loss * batch.size
            seen += batch.size

        row = {'epoch': epoch, 'lr': lr, 'train_loss': total / seen}
        if valid_set is not None and len(valid_set):
            row.update(_split_report(work, valid_set, config, 'valid'))
        history.append(row)

        if verbose:
            extra = f" | valid loss {row['valid_loss']:.6f}" if 'valid_loss' in row else ""
            print(f"📊 Epoch [{epoch}/{config.epochs}] train loss {row['train_loss']:.6f}{extra} | lr {lr:.3e}")

        scheduler.step(row.get('valid_loss', row['train_loss']))

    return TrainResult(work, history, time.perf_counter() - started)
