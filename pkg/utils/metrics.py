# metrics.py
"""
Evaluation metrics: MAE, RMSE, R^2 for regression and ROC-AUC (rank
statistic) for binary classification. Labels may hold NaN for missing
entries; those are masked out everywhere.
"""

from typing import Dict, Sequence

import numpy as np
from scipy.stats import rankdata

from utils.errors import DegenerateLabels, DimensionMismatch
from utils.shallow_model import ensemble_predict_batch


def _observed(predictions, labels):
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if predictions.shape != labels.shape:
        raise DimensionMismatch(f"predictions {predictions.shape} and labels {labels.shape} differ in shape")
    mask = ~np.isnan(labels)
    return predictions[mask], labels[mask]


def mse(predictions, labels) -> float:
    p, y = _observed(predictions, labels)
    if y.size == 0:
        return float('nan')
    return float(np.mean((p - y) ** 2))


def mae(predictions, labels) -> float:
    p, y = _observed(predictions, labels)
    if y.size == 0:
        return float('nan')
    return float(np.mean(np.abs(p - y)))


def rmse(predictions, labels) -> float:
    return float(np.sqrt(mse(predictions, labels)))


def r2_score(predictions, labels) -> float:
    """1 - SS_res / SS_tot; NaN when the labels are constant."""
    p, y = _observed(predictions, labels)
    if y.size == 0:
        return float('nan')
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0.0:
        return float('nan')
    return 1.0 - float(np.sum((y - p) ** 2)) / ss_tot


def roc_auc(labels, scores) -> float:
    """
    Area under the ROC curve via the Mann-Whitney rank statistic.

    Tied scores get average ranks, so each tied positive/negative pair
    counts one half.

    Raises:
        DegenerateLabels: only one class present
    """
    labels = np.asarray(labels, dtype=np.float64).ravel()
    scores = np.asarray(scores, dtype=np.float64).ravel()
    if labels.shape != scores.shape:
        raise DimensionMismatch(f"{labels.size} labels for {scores.size} scores")
    mask = ~np.isnan(labels)
    labels, scores = labels[mask], scores[mask]
    positive = labels > 0.5
    n_pos = int(positive.sum())
    n_neg = int(labels.size - n_pos)
    if n_pos == 0 or n_neg == 0:
        raise DegenerateLabels(f"ROC-AUC needs both classes ({n_pos} positive, {n_neg} negative)")
    ranks = rankdata(scores)
    return float((ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


def multitask_roc_auc(labels, scores) -> float:
    """
    Mean ROC-AUC over task columns. Columns with a single class in this split
    are skipped; DegenerateLabels only when no column is usable.
    """
    labels = np.asarray(labels, dtype=np.float64)
    scores = np.asarray(scores, dtype=np.float64)
    if labels.ndim == 1:
        return roc_auc(labels, scores)
    values = []
    for task in range(labels.shape[1]):
        try:
            values.append(roc_auc(labels[:, task], scores[:, task]))
        except DegenerateLabels:
            continue
    if not values:
        raise DegenerateLabels("every task has a single class in this split")
    return float(np.mean(values))


# ============================================
# REPORTS
# ============================================

def evaluate_predictions(predictions, labels, task: str) -> Dict[str, float]:
    """
    Metric report for one split.

    Args:
        predictions: B x T raw model outputs (logits for classification)
        labels: B x T labels, NaN = missing
        task: 'regression' or 'binary_classification'
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64).reshape(predictions.shape)
    if task == 'regression':
        return {
            'mae': mae(predictions, labels),
            'rmse': rmse(predictions, labels),
            'r2': r2_score(predictions, labels),
        }
    if task == 'binary_classification':
        return {'roc_auc': multitask_roc_auc(labels, predictions)}
    raise ValueError(f"unknown task '{task}'")


def evaluate(models: Sequence, dataset, task: str, batch_size: int = 256) -> Dict[str, float]:
    """
    Metrics of the ensemble-averaged prediction over one dataset split; a
    single model is a 1-member ensemble. An empty split gives an empty report.

    Raises:
        DegenerateLabels: no task of the split has both classes (classification)
    """
    if len(dataset) == 0:
        return {}
    predictions = np.vstack([ensemble_predict_batch(models, batch) for batch in dataset.batches(batch_size)])
    return evaluate_predictions(predictions, dataset.labels, task)


def summarize(values: Sequence[float]) -> Dict[str, float]:
    """Mean and population std of per-seed values, ignoring NaN."""
    arr = np.asarray(list(values), dtype=np.float64)
    arr = arr[~np.isnan(arr)]
    if arr.size == 0:
        return {'mean': float('nan'), 'std': float('nan')}
    return {'mean': float(arr.mean()), 'std': float(arr.std())}
