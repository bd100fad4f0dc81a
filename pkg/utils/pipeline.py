# pipeline.py
"""
Dataset orchestration: documents -> repaired graphs -> view bundles, and
multi-seed training runs with ensemble evaluation.

Independent units (graphs, seeds) may run on a thread pool; results are
always assembled in input order, so output does not depend on scheduling.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import RunConfig
from utils.errors import DegenerateLabels, DimensionMismatch, WalkViewError
from utils.features import ViewSelection, build_vocabulary
from utils.graph_core import AttributedGraph
from utils.graph_io import GraphDocument, Manifest
from utils.metrics import evaluate, summarize
from utils.repair import repair
from utils.shallow_model import ShallowModel
from utils.training import GraphDataset, TrainResult, train
from utils.walks import ViewBundle, build_view_bundle

SPLITS = ('train', 'valid', 'test')


def _ordered_map(fn: Callable, items: Sequence, workers: int) -> List:
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(fn, items))


# ============================================
# PROCESSING
# ============================================

@dataclass
class ProcessResult:
    bundles: List[ViewBundle] = field(default_factory=list)
    errors: List[Dict[str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def process_graph(graph_id: str, g: AttributedGraph, selection: ViewSelection) -> ViewBundle:
    """Repair one graph and build every walk view the selection needs."""
    repaired, record = repair(g)
    return build_view_bundle(graph_id, repaired, selection.walk_kinds, selection.gamma, repair=record)


def documents_to_graphs(documents: Sequence[GraphDocument],
                        vocabulary: Optional[Dict[str, List]] = None) -> List[Tuple[str, Any]]:
    """
    (id, AttributedGraph or WalkViewError) per document. Categorical
    attributes share one vocabulary: the given one, or the sorted union
    of values observed across all documents.
    """
    if vocabulary is None:
        observed = [d.categorical for d in documents if d.categorical]
        vocabulary = build_vocabulary(observed) if observed else None
    graphs = []
    for document in documents:
        try:
            graphs.append((document.id, document.to_graph(vocabulary)))
        except WalkViewError as e:
            graphs.append((document.id, e))
    return graphs


def process_dataset(graphs: Sequence[Tuple[str, Any]], selection: ViewSelection,
                    workers: int = 1, verbose: bool = False) -> ProcessResult:
    """
    Repair and expand every graph; failures are collected per graph id.

    Args:
        graphs: (graph_id, AttributedGraph) pairs; an exception in place of
            the graph is reported as that graph's error
        selection: views and gamma to build
        workers: thread count, 1 runs inline

    Returns:
        ProcessResult with bundles in input order and the error list
    """
    if verbose:
        print(f"🔧 Processing {len(graphs)} graphs (views {','.join(selection.names())}, gamma {selection.gamma})")

    def run(item):
        graph_id, g = item
        if isinstance(g, Exception):
            return graph_id, g
        try:
            return graph_id, process_graph(graph_id, g, selection)
        except WalkViewError as e:
            return graph_id, e

    result = ProcessResult()
    for graph_id, outcome in _ordered_map(run, list(graphs), workers):
        if isinstance(outcome, Exception):
            result.errors.append({'id': graph_id, 'error': type(outcome).__name__, 'message': str(outcome)})
            if verbose:
                print(f"⚠️ {graph_id}: {type(outcome).__name__}: {outcome}")
        else:
            result.bundles.append(outcome)
    if verbose:
        print(f"✅ {len(result.bundles)} bundles built, {len(result.errors)} failures")
    return result


# ============================================
# EXPERIMENTS
# ============================================

@dataclass
class RunRecord:
    """One trained seed: configuration snapshot, history and final metrics."""

    seed: int
    config: Dict[str, Any]
    history: List[Dict[str, float]] = field(default_factory=list)
    metrics: Dict[str, Dict[str, float]] = field(default_factory=dict)
    wall_time: float = 0.0
    error: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> Dict[str, Any]:
        """Reproducible fields only; wall_time goes to the run registry."""
        return {
            'seed': self.seed,
            'config': self.config,
            'history': self.history,
            'metrics': self.metrics,
            'error': self.error,
        }


@dataclass
class ExperimentResult:
    records: List[RunRecord]
    models: Dict[int, ShallowModel]
    ensemble: Dict[str, Dict[str, float]]
    summary: Dict[str, Dict[str, Dict[str, float]]]
    process_errors: List[Dict[str, str]] = field(default_factory=list)

    @property
    def failed_seeds(self) -> List[int]:
        return [r.seed for r in self.records if not r.ok]

    def metric_rows(self) -> List[Dict[str, Any]]:
        """Long-format rows for the metrics table, in a fixed order."""
        rows = []
        for record in self.records:
            for split in SPLITS:
                for metric, value in record.metrics.get(split, {}).items():
                    rows.append({'scope': 'seed', 'seed': record.seed, 'split': split, 'metric': metric, 'value': value})
        for split in SPLITS:
            for metric, stats in self.summary.get(split, {}).items():
                rows.append({'scope': 'mean', 'seed': None, 'split': split, 'metric': metric, 'value': stats['mean']})
                rows.append({'scope': 'std', 'seed': None, 'split': split, 'metric': metric, 'value': stats['std']})
        for split in SPLITS:
            for metric, value in self.ensemble.get(split, {}).items():
                rows.append({'scope': 'ensemble', 'seed': None, 'split': split, 'metric': metric, 'value': value})
        rows.append({'scope': 'ensemble', 'seed': None, 'split': 'all', 'metric': 'members',
                     'value': len(self.models)})
        return rows


def split_metrics(models: Sequence[ShallowModel], dataset: GraphDataset, task: str) -> Dict[str, float]:
    try:
        return evaluate(models, dataset, task)
    except DegenerateLabels:
        return {}


def build_datasets(bundles: Sequence[ViewBundle], manifest: Manifest,
                   selection: ViewSelection) -> Dict[str, GraphDataset]:
    by_id = {b.graph_id: b for b in bundles}
    datasets = {}
    for split in SPLITS:
        entries = [e for e in manifest.split(split) if e.graph_id in by_id]
        rows = np.full((len(entries), max(manifest.task_count, 1)), np.nan)
        for k, entry in enumerate(entries):
            if entry.labels.size:
                rows[k] = entry.labels
        datasets[split] = GraphDataset.from_bundles([by_id[e.graph_id] for e in entries], rows, selection,
                                                    split=split)
    return datasets


def run_experiment(manifest: Manifest, run_config: RunConfig, seed: int = 0, n_seeds: int = 1,
                   workers: int = 1, verbose: bool = False,
                   bundles: Optional[Sequence[ViewBundle]] = None) -> ExperimentResult:
    """
    Train n_seeds models (seeds seed..seed+n_seeds-1) on the manifest's train
    split and evaluate each, plus their prediction-averaging ensemble, on every
    split. Test labels are only read for evaluation.

    Args:
        manifest: loaded manifest
        run_config: model and train configuration
        seed: first seed
        n_seeds: number of seeds
        workers: threads for graph processing and seed training
        bundles: precomputed view bundles (processed from the manifest when omitted)

    Returns:
        ExperimentResult; failed seeds stay in records with their error
    """
    model_config = run_config.model
    selection = model_config.selection()

    process_errors = list(manifest.errors)
    if bundles is None:
        graphs = documents_to_graphs([e.document for e in manifest.entries])
        graphs = [(entry.graph_id, g) for entry, (_, g) in zip(manifest.entries, graphs)]
        processed = process_dataset(graphs, selection, workers, verbose)
        bundles = processed.bundles
        process_errors.extend(processed.errors)

    datasets = build_datasets(bundles, manifest, selection)
    train_set = datasets['train']
    if len(train_set) == 0:
        raise DimensionMismatch("manifest has no usable training graphs")
    if train_set.task_count != model_config.output_dim:
        raise DimensionMismatch(
            f"manifest labels have {train_set.task_count} tasks, model output_dim is {model_config.output_dim}"
        )
    feature_dim = train_set.feature_dim
    snapshot = run_config.snapshot()

    def run_seed(s: int) -> Tuple[RunRecord, Optional[ShallowModel]]:
        train_config = run_config.train.model_copy(update={'seed': s})
        config = dict(snapshot, train=train_config.model_dump())
        started = time.perf_counter()
        try:
            model = ShallowModel.initialize(model_config, feature_dim, s)
            result: TrainResult = train(train_set, model, train_config, datasets['valid'], verbose=False)
        except WalkViewError as e:
            if verbose:
                print(f"❌ Seed {s} failed: {type(e).__name__}: {e}")
            return RunRecord(s, config, error=f"{type(e).__name__}: {e}",
                             wall_time=time.perf_counter() - started), None
        metrics = {split: split_metrics([result.model], datasets[split], model_config.task) for split in SPLITS}
        if verbose:
            print(f"✅ Seed {s}: final train loss {result.final.get('train_loss', float('nan')):.6f}")
        return RunRecord(s, config, result.history, metrics, time.perf_counter() - started), result.model

    seeds = list(range(seed, seed + n_seeds))
    outcomes = _ordered_map(run_seed, seeds, workers)
    records = [record for record, _ in outcomes]
    models = {record.seed: model for record, model in outcomes if model is not None}

    ensemble = {}
    if models:
        members = [models[s] for s in sorted(models)]
        ensemble = {split: split_metrics(members, datasets[split], model_config.task) for split in SPLITS}

    summary: Dict[str, Dict[str, Dict[str, float]]] = {}
    for split in SPLITS:
        names = sorted({m for r in records if r.ok for m in r.metrics.get(split, {})})
        summary[split] = {
            name: summarize([r.metrics[split][name] for r in records if r.ok and name in r.metrics.get(split, {})])
            for name in names
        }

    if verbose:
        print(f"📊 {len(models)}/{len(seeds)} seeds trained; ensemble metrics: {ensemble}")
    return ExperimentResult(records, models, ensemble, summary, process_errors)
