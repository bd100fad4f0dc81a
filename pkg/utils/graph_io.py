# graph_io.py
"""
On-disk formats: graph documents, manifests, view bundles, fingerprint
CSV/JSONL, model checkpoints, metric tables.

Every writer goes through atomic_write (temp file in the target directory,
then os.replace), so a crashed run never leaves a half-written file. Floats
are written with Python's shortest round-trip repr.
"""

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from utils.errors import DimensionMismatch, DocumentError, ManifestError, WalkViewError
from utils.features import build_vocabulary, one_hot_encode
from utils.graph_core import AttributedGraph
from utils.repair import RepairRecord
from utils.shallow_model import ModelConfig, ShallowModel
from utils.walks import ViewBundle, WalkKind, WalkView

BUNDLE_FORMAT = 'walkview-bundle'
CHECKPOINT_FORMAT = 'walkview-checkpoint'
FORMAT_VERSION = 1


# ============================================
# ATOMIC WRITES
# ============================================

def atomic_write(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f'.{path.name}.', suffix='.tmp', dir=str(path.parent))
    try:
        with os.fdopen(fd, 'w', encoding='utf-8', newline='') as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise
    return path


def json_safe(value):
    """JSON-safe copy: numpy -> python, NaN/inf -> None."""
    if isinstance(value, dict):
        return {str(k): json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    if isinstance(value, np.integer):
        return int(value)
    return value


def dumps(document) -> str:
    return json.dumps(json_safe(document), sort_keys=False, allow_nan=False)


def write_json(path, document) -> Path:
    return atomic_write(path, dumps(document) + '\n')


def write_jsonl(path, documents: Iterable) -> Path:
    return atomic_write(path, ''.join(dumps(d) + '\n' for d in documents))


def format_float(value: float) -> str:
    return repr(float(value))


# ============================================
# GRAPH DOCUMENTS
# ============================================

class GraphDocument(BaseModel):
    """{id, n, edges: [[i, j, w?]], features: [[...]], categorical?: {attr: [values]}}"""

    model_config = ConfigDict(extra='forbid')

    id: str
    n: int = Field(ge=0)
    edges: List[List[Optional[float]]] = Field(default_factory=list)
    features: Optional[List[List[float]]] = None
    categorical: Optional[Dict[str, List[Any]]] = None

    @model_validator(mode='after')
    def _check_shapes(self):
        if self.features is not None:
            widths = {len(row) for row in self.features}
            if len(widths) > 1:
                raise ValueError(f"feature rows have unequal lengths {sorted(widths)}")
            if len(self.features) != self.n:
                raise ValueError(f"{len(self.features)} feature rows for {self.n} nodes")
        for edge in self.edges:
            if len(edge) not in (2, 3) or edge[0] is None or edge[1] is None:
                raise ValueError(f"malformed edge {edge}")
            for index in edge[:2]:
                if not math.isfinite(index) or index != int(index):
                    raise ValueError(f"node indices must be integers, got {edge}")
        return self

    def edge_tuples(self) -> List[Tuple[int, int, float]]:
        edges = []
        for edge in self.edges:
            w = 1.0 if len(edge) == 2 or edge[2] is None else float(edge[2])
            edges.append((int(edge[0]), int(edge[1]), w))
        return edges

    def numeric_features(self) -> np.ndarray:
        if not self.features:
            return np.zeros((self.n, 0))
        return np.array(self.features, dtype=np.float64)

    def to_graph(self, vocabulary: Optional[Dict[str, List]] = None) -> AttributedGraph:
        """
        Build the AttributedGraph; one-hot blocks of categorical attributes are
        appended after the numeric features.
        """
        x = self.numeric_features()
        if self.categorical:
            vocab = vocabulary if vocabulary is not None else build_vocabulary([self.categorical])
            encoded = one_hot_encode(self.categorical, vocab, node_count=self.n)
            if x.shape[0] != encoded.shape[0]:
                raise DocumentError(f"graph '{self.id}': {x.shape[0]} feature rows for {self.n} nodes")
            x = np.hstack([x, encoded])
        return AttributedGraph.from_edges(self.n, self.edge_tuples(), x)


def parse_graph_document(data) -> GraphDocument:
    try:
        return GraphDocument.model_validate(data)
    except ValidationError as e:
        raise DocumentError(f"invalid graph document: {e.errors()[0]['msg']} at {e.errors()[0]['loc']}") from e


def graph_to_document(graph_id: str, g: AttributedGraph) -> Dict:
    return {
        'id': graph_id,
        'n': g.node_count,
        'edges': [[i, j, w] for i, j, w in g.edges],
        'features': g.features.tolist(),
    }


def expand_inputs(paths: Sequence[Union[str, Path]]) -> List[Path]:
    """Files as given; directories contribute their *.json / *.jsonl files sorted by name."""
    files = []
    for raw in paths:
        path = Path(raw)
        if path.is_dir():
            files.extend(sorted(p for p in path.iterdir() if p.suffix in ('.json', '.jsonl') and p.is_file()))
        else:
            files.append(path)
    return files


@dataclass
class LoadedDocument:
    source: str
    data: Optional[Dict] = None
    error: Optional[str] = None


def read_documents(paths: Sequence[Union[str, Path]]) -> List[LoadedDocument]:
    """
    Raw JSON objects from every input file, one per .json file or per .jsonl
    line. Unparseable entries are returned with an error instead of raising.

    Raises:
        OSError: an input path cannot be read
    """
    loaded = []
    for path in expand_inputs(paths):
        text = path.read_text(encoding='utf-8')
        if path.suffix == '.jsonl':
            for lineno, line in enumerate(text.splitlines(), start=1):
                if not line.strip():
                    continue
                loaded.append(_decode(f'{path}:{lineno}', line))
        else:
            loaded.append(_decode(str(path), text))
    return loaded


def _decode(source: str, text: str) -> LoadedDocument:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as e:
        return LoadedDocument(source, error=f"not valid JSON ({e.msg})")
    if not isinstance(data, dict):
        return LoadedDocument(source, error="document must be a JSON object")
    return LoadedDocument(source, data=data)


# ============================================
# MANIFESTS
# ============================================

class ManifestRecord(BaseModel):
    model_config = ConfigDict(extra='forbid')

    id: Optional[str] = None
    graph: Union[str, Dict[str, Any]]
    label: Union[List[Optional[float]], float, None] = None
    split: Literal['train', 'valid', 'test']

    def labels(self) -> List[float]:
        if self.label is None:
            return []
        values = self.label if isinstance(self.label, list) else [self.label]
        return [float('nan') if v is None else float(v) for v in values]


@dataclass
class ManifestEntry:
    graph_id: str
    document: GraphDocument
    labels: np.ndarray
    split: str


@dataclass
class Manifest:
    entries: List[ManifestEntry]
    errors: List[Dict[str, str]]

    @property
    def task_count(self) -> int:
        return int(self.entries[0].labels.shape[0]) if self.entries else 0

    def split(self, name: str) -> List[ManifestEntry]:
        return [e for e in self.entries if e.split == name]


def load_manifest(path: Union[str, Path]) -> Manifest:
    """
    Read a JSON-lines manifest. Records whose graph cannot be loaded are
    reported in Manifest.errors; structural problems of the manifest itself
    raise.

    Raises:
        ManifestError: duplicate ids, unreadable records, inconsistent label arity
        OSError: manifest file cannot be read
    """
    path = Path(path)
    base = path.parent
    entries: List[ManifestEntry] = []
    errors: List[Dict[str, str]] = []
    seen = set()

    for lineno, line in enumerate(path.read_text(encoding='utf-8').splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = ManifestRecord.model_validate(json.loads(line))
        except (json.JSONDecodeError, ValidationError) as e:
            raise ManifestError(f"{path}:{lineno}: invalid manifest record ({e})") from e

        graph_id = record.id
        try:
            if isinstance(record.graph, dict):
                document = parse_graph_document(record.graph)
            else:
                graph_path = (base / record.graph) if not Path(record.graph).is_absolute() else Path(record.graph)
                document = parse_graph_document(json.loads(graph_path.read_text(encoding='utf-8')))
        except (OSError, json.JSONDecodeError, WalkViewError) as e:
            errors.append({'id': graph_id or f'line {lineno}', 'error': str(e)})
            continue

        graph_id = graph_id or document.id
        if graph_id in seen:
            raise ManifestError(f"{path}:{lineno}: duplicate graph id '{graph_id}'")
        seen.add(graph_id)
        entries.append(ManifestEntry(graph_id, document, np.array(record.labels(), dtype=np.float64), record.split))

    arities = {e.labels.shape[0] for e in entries}
    if len(arities) > 1:
        raise ManifestError(f"{path}: records carry labels of different lengths {sorted(arities)}")
    return Manifest(entries, errors)


def manifest_line(graph, label, split: str, graph_id: Optional[str] = None) -> Dict:
    record = {'graph': graph, 'label': label, 'split': split}
    if graph_id is not None:
        record = {'id': graph_id, **record}
    return record


# ============================================
# VIEW BUNDLES
# ============================================

def bundle_to_document(bundle: ViewBundle) -> Dict:
    views = {}
    for kind, view in bundle.views.items():
        views[kind.value] = {
            'adjacency': view.adjacency,
            'stationary': view.stationary,
            'scaled_features': view.scaled_features,
            'gamma': view.gamma,
        }
    repair = bundle.repair.to_dict() if isinstance(bundle.repair, RepairRecord) else None
    return {
        'format': BUNDLE_FORMAT,
        'version': FORMAT_VERSION,
        'id': bundle.graph_id,
        'gamma': bundle.gamma,
        'graph': graph_to_document(bundle.graph_id, bundle.graph),
        'repair': repair,
        'views': views,
    }


def is_bundle_document(data: Dict) -> bool:
    return isinstance(data, dict) and data.get('format') == BUNDLE_FORMAT


def document_to_bundle(data: Dict) -> ViewBundle:
    """Rebuild a ViewBundle from stored arrays (nothing is recomputed)."""
    if not is_bundle_document(data):
        raise DocumentError("not a view bundle document")
    if data.get('version') != FORMAT_VERSION:
        raise DocumentError(f"unsupported bundle version {data.get('version')}")
    graph = parse_graph_document(data['graph']).to_graph()
    views = {}
    try:
        for name, stored in (data.get('views') or {}).items():
            kind = WalkKind(name)
            views[kind] = WalkView(
                kind=kind,
                adjacency=np.array(stored['adjacency'], dtype=np.float64).reshape(graph.node_count, graph.node_count),
                stationary=np.array(stored['stationary'], dtype=np.float64),
                scaled_features=np.array(stored['scaled_features'], dtype=np.float64),
                gamma=stored.get('gamma'),
            )
    except (KeyError, ValueError) as e:
        raise DocumentError(f"bundle '{data.get('id')}': malformed view ({e})") from e
    repair = RepairRecord.from_dict(data['repair']) if data.get('repair') else None
    return ViewBundle(graph_id=data['id'], graph=graph, views=views, repair=repair, gamma=data.get('gamma'))


def bundle_filename(graph_id: str) -> str:
    safe = ''.join(c if c.isalnum() or c in '-_.' else '_' for c in graph_id)
    return f'{safe}.bundle.json'


def bundle_filenames(graph_ids: Sequence[str]) -> Dict[str, str]:
    """
    Map each graph id to its bundle file name.

    Raises:
        DocumentError: two ids sanitize to the same file name
    """
    owners = {}
    for graph_id in graph_ids:
        name = bundle_filename(graph_id)
        if name in owners:
            raise DocumentError(f"graph ids '{owners[name]}' and '{graph_id}' both map to bundle file {name}")
        owners[name] = graph_id
    return {graph_id: name for name, graph_id in owners.items()}


# ============================================
# FINGERPRINTS
# ============================================

def fingerprint_csv(rows: Sequence[Tuple[str, np.ndarray]]) -> str:
    width = max((len(v) for _, v in rows), default=0)
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(['id'] + [f'v{k}' for k in range(width)])
    for graph_id, values in rows:
        writer.writerow([graph_id] + [format_float(v) for v in values])
    return buffer.getvalue()


def write_fingerprint_csv(path, rows) -> Path:
    return atomic_write(path, fingerprint_csv(rows))


# ============================================
# CHECKPOINTS
# ============================================

def checkpoint_document(model, seed: int, run_snapshot: Optional[Dict] = None) -> Dict:
    """Config, seed and parameter tensors (row-major) of one trained model."""
    return {
        'format': CHECKPOINT_FORMAT,
        'version': FORMAT_VERSION,
        'seed': int(seed),
        'feature_dim': model.feature_dim,
        'model': model.config.model_dump(),
        'run': run_snapshot,
        'parameters': [
            {'name': name, 'shape': list(value.shape), 'data': value.reshape(-1)}
            for name, value in model.params.items()
        ],
    }


def write_checkpoint(path, model, seed: int, run_snapshot: Optional[Dict] = None) -> Path:
    return write_json(path, checkpoint_document(model, seed, run_snapshot))


def load_checkpoint(path):
    """
    Returns:
        (ShallowModel, seed)

    Raises:
        DocumentError: not a checkpoint
        DimensionMismatch: tensor shapes disagree with the stored configuration
    """
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise DocumentError(f"{path}: not valid JSON ({e.msg})") from e
    if data.get('format') != CHECKPOINT_FORMAT or data.get('version') != FORMAT_VERSION:
        raise DocumentError(f"{path}: not a version {FORMAT_VERSION} checkpoint")
    try:
        config = ModelConfig(**data['model'])
    except ValidationError as e:
        raise DocumentError(f"{path}: invalid model config ({e})") from e
    state = {}
    for entry in data['parameters']:
        values = np.array(entry['data'], dtype=np.float64)
        shape = tuple(entry['shape'])
        if values.size != int(np.prod(shape)):
            raise DimensionMismatch(f"{path}: parameter {entry['name']} has {values.size} values for shape {shape}")
        state[entry['name']] = values.reshape(shape)
    return ShallowModel.from_state(config, int(data['feature_dim']), state), int(data['seed'])


# ============================================
# METRIC TABLES
# ============================================

METRIC_COLUMNS = ('scope', 'seed', 'split', 'metric', 'value')


def metrics_csv(rows: Iterable[Dict[str, Any]]) -> str:
    """Long-format table: scope,seed,split,metric,value."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator='\n')
    writer.writerow(METRIC_COLUMNS)
    for row in rows:
        value = row['value']
        writer.writerow([
            row['scope'],
            '' if row.get('seed') is None else int(row['seed']),
            row['split'],
            row['metric'],
            format_float(value) if isinstance(value, (float, np.floating)) else value,
        ])
    return buffer.getvalue()


def write_metrics_csv(path, rows) -> Path:
    return atomic_write(path, metrics_csv(rows))
