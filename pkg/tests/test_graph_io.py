"""Graph documents, manifests, bundles, checkpoints and CSV tables."""

import json

import numpy as np
import pytest

from conftest import linear_model_config
from utils.errors import DimensionMismatch, DocumentError, ManifestError, UnknownCategory
from utils.features import ViewSelection
from utils.graph_io import (
    atomic_write, bundle_filename, bundle_filenames, bundle_to_document, document_to_bundle, fingerprint_csv,
    graph_to_document, json_safe, load_checkpoint, load_manifest, manifest_line, metrics_csv,
    parse_graph_document, read_documents, write_checkpoint, write_json
)
from utils.pipeline import process_graph
from utils.repair import RepairReason
from utils.shallow_model import ShallowModel
from utils.walks import WalkKind


def _write_lines(path, records):
    path.write_text(''.join(json.dumps(r) + '\n' for r in records), encoding='utf-8')
    return path


class TestGraphDocument:
    def test_edges_default_to_unit_weight(self):
        doc = parse_graph_document({'id': 'p3', 'n': 3, 'edges': [[0, 1], [2, 1, 2.5]], 'features': [[1], [1], [1]]})
        g = doc.to_graph()
        assert g.edges == ((0, 1, 1.0), (1, 2, 2.5))

    def test_categorical_blocks_follow_numeric_features(self):
        doc = parse_graph_document({
            'id': 'co', 'n': 2, 'edges': [[0, 1]], 'features': [[0.5], [1.5]],
            'categorical': {'element': ['C', 'O']},
        })
        g = doc.to_graph({'element': ['C', 'N', 'O']})
        assert np.array_equal(g.features, [[0.5, 1, 0, 0], [1.5, 0, 0, 1]])

    def test_unknown_category_with_shared_vocabulary(self):
        doc = parse_graph_document({'id': 's', 'n': 1, 'categorical': {'element': ['S']}})
        with pytest.raises(UnknownCategory):
            doc.to_graph({'element': ['C', 'N', 'O']})

    def test_unknown_key_rejected(self):
        with pytest.raises(DocumentError):
            parse_graph_document({'id': 'x', 'n': 1, 'feature': [[1]]})

    @pytest.mark.parametrize('document', [
        {'id': 'x', 'n': 2, 'edges': [[0, 1.5]], 'features': [[1], [1]]},
        {'id': 'x', 'n': 2, 'edges': [[0, float('nan')]], 'features': [[1], [1]]},
        {'id': 'x', 'n': 2, 'edges': [[0, float('inf')]], 'features': [[1], [1]]},
        {'id': 'x', 'n': 2, 'edges': [[0]], 'features': [[1], [1]]},
        {'id': 'x', 'n': 3, 'features': [[1.0], [1.0, 2.0], [1.0]]},
        {'id': 'x', 'n': 3, 'features': [[1.0], [1.0]]},
        {'id': 'x', 'n': -1},
    ])
    def test_malformed_documents_rejected(self, document):
        with pytest.raises(DocumentError):
            parse_graph_document(document)

    def test_graph_to_document_round_trip(self, p3):
        doc = graph_to_document('p3', p3)
        assert parse_graph_document(doc).to_graph().edges == p3.edges


class TestReadDocuments:
    def test_directory_is_sorted_and_errors_isolated(self, tmp_path):
        (tmp_path / 'b.json').write_text('{"id": "b", "n": 1, "features": [[1]]}')
        (tmp_path / 'a.jsonl').write_text('{"id": "a1", "n": 1, "features": [[1]]}\nnot json\n\n')
        (tmp_path / 'notes.txt').write_text('ignored')
        loaded = read_documents([tmp_path])
        assert [d.data['id'] if d.data else None for d in loaded] == ['a1', None, 'b']
        assert loaded[1].error.startswith('not valid JSON')


class TestManifest:
    def test_inline_and_file_graphs(self, tmp_path):
        (tmp_path / 'k3.json').write_text(json.dumps(
            {'id': 'k3', 'n': 3, 'edges': [[0, 1], [1, 2], [0, 2]], 'features': [[1], [1], [1]]}))
        inline = {'id': 'p3', 'n': 3, 'edges': [[0, 1], [1, 2]], 'features': [[1], [1], [1]]}
        path = _write_lines(tmp_path / 'm.jsonl', [
            manifest_line('k3.json', 1.0, 'train'),
            manifest_line(inline, [None], 'valid', graph_id='path'),
        ])
        manifest = load_manifest(path)
        assert [e.graph_id for e in manifest.entries] == ['k3', 'path']
        assert manifest.task_count == 1
        assert np.isnan(manifest.entries[1].labels[0])
        assert [e.graph_id for e in manifest.split('valid')] == ['path']

    def test_bad_graph_is_reported_not_fatal(self, tmp_path):
        path = _write_lines(tmp_path / 'm.jsonl', [
            manifest_line('missing.json', 1.0, 'train', graph_id='gone'),
            manifest_line({'id': 'ok', 'n': 1, 'features': [[1]]}, 2.0, 'train'),
        ])
        manifest = load_manifest(path)
        assert [e.graph_id for e in manifest.entries] == ['ok']
        assert manifest.errors[0]['id'] == 'gone'

    def test_duplicate_ids(self, tmp_path):
        graph = {'id': 'a', 'n': 1, 'features': [[1]]}
        path = _write_lines(tmp_path / 'm.jsonl', [manifest_line(graph, 1.0, 'train')] * 2)
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_label_arity_mismatch(self, tmp_path):
        path = _write_lines(tmp_path / 'm.jsonl', [
            manifest_line({'id': 'a', 'n': 1, 'features': [[1]]}, [1.0], 'train'),
            manifest_line({'id': 'b', 'n': 1, 'features': [[1]]}, [1.0, 0.0], 'train'),
        ])
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_bad_split(self, tmp_path):
        path = _write_lines(tmp_path / 'm.jsonl', [manifest_line({'id': 'a', 'n': 1}, 1.0, 'holdout')])
        with pytest.raises(ManifestError):
            load_manifest(path)

    def test_empty_manifest(self, tmp_path):
        path = tmp_path / 'm.jsonl'
        path.write_text('')
        manifest = load_manifest(path)
        assert manifest.entries == [] and manifest.task_count == 0


class TestBundles:
    def test_document_keeps_views_and_repair(self, disconnected4):
        bundle = process_graph('two pairs', disconnected4, ViewSelection.parse('x1,x2,xg', 0.3))
        document = json.loads(json.dumps(json_safe(bundle_to_document(bundle))))
        restored = document_to_bundle(document)
        assert restored.repair.reason is RepairReason.DISCONNECTED
        assert restored.gamma == 0.3
        for kind in (WalkKind.WALK1, WalkKind.WALK2, WalkKind.WALK_GAMMA):
            assert np.array_equal(restored.view(kind).stationary, bundle.view(kind).stationary)
        assert bundle_filename('two pairs') == 'two_pairs.bundle.json'

    def test_wrong_format(self):
        with pytest.raises(DocumentError):
            document_to_bundle({'format': 'something-else'})

    def test_filenames_are_unique_per_id(self):
        assert bundle_filenames(['k3', 'a b']) == {'k3': 'k3.bundle.json', 'a b': 'a_b.bundle.json'}
        with pytest.raises(DocumentError, match='a_b.bundle.json'):
            bundle_filenames(['a b', 'k3', 'a_b'])


class TestCheckpoints:
    def test_write_and_load(self, tmp_path):
        model = ShallowModel.initialize(linear_model_config(graphnorm=True, activation='relu'), 2, seed=9)
        path = write_checkpoint(tmp_path / 'ckpt' / 'seed_9.json', model, 9)
        restored, seed = load_checkpoint(path)
        assert seed == 9
        assert restored.same_architecture(model)
        for name in model.params:
            assert np.array_equal(restored.params[name], model.params[name])

    def test_truncated_tensor(self, tmp_path):
        model = ShallowModel.initialize(linear_model_config(), 2, seed=0)
        path = write_checkpoint(tmp_path / 'c.json', model, 0)
        data = json.loads(path.read_text())
        data['parameters'][0]['data'] = data['parameters'][0]['data'][:-1]
        path.write_text(json.dumps(data))
        with pytest.raises(DimensionMismatch):
            load_checkpoint(path)

    def test_not_a_checkpoint(self, tmp_path):
        path = tmp_path / 'c.json'
        write_json(path, {'format': 'walkview-bundle'})
        with pytest.raises(DocumentError):
            load_checkpoint(path)


class TestTables:
    def test_fingerprint_csv_uses_repr_floats(self):
        text = fingerprint_csv([('k3', np.array([1 / 3])), ('p3', np.array([0.25]))])
        assert text == 'id,v0\nk3,0.3333333333333333\np3,0.25\n'

    def test_metrics_csv(self):
        text = metrics_csv([
            {'scope': 'seed', 'seed': 0, 'split': 'test', 'metric': 'mae', 'value': 0.5},
            {'scope': 'ensemble', 'seed': None, 'split': 'all', 'metric': 'members', 'value': 3},
        ])
        assert text.splitlines() == [
            'scope,seed,split,metric,value',
            'seed,0,test,mae,0.5',
            'ensemble,,all,members,3',
        ]


def test_json_safe_replaces_non_finite():
    assert json_safe({'a': np.float64('nan'), 'b': np.arange(2), 'c': (np.int64(3),)}) == \
        {'a': None, 'b': [0, 1], 'c': [3]}


def test_atomic_write_creates_parents(tmp_path):
    target = atomic_write(tmp_path / 'deep' / 'dir' / 'f.txt', 'hello')
    assert target.read_text() == 'hello'
    assert [p.name for p in target.parent.iterdir()] == ['f.txt']
