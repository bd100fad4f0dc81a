import numpy as np

from conftest import random_connected_graph
from utils.checks import check_bundle, check_graph, stationarity_residual, summarize_reports
from utils.features import ViewSelection
from utils.graph_io import bundle_to_document, document_to_bundle, json_safe
from utils.pipeline import process_graph
from utils.repair import repair
from utils.walks import WalkKind


def test_fixture_graphs_pass(p3, k3, s4, disconnected4):
    for graph_id, g in (('p3', p3), ('k3', k3), ('s4', s4), ('pairs', disconnected4)):
        repaired, _ = repair(g)
        report = check_graph(graph_id, repaired, 0.1)
        assert report.passed, report.failures()


def test_oracle_runs_for_small_graphs(p3, rng):
    names = [r.name for r in check_graph('p3', p3, 0.1).results]
    assert 'walk2_oracle' in names
    big = random_connected_graph(rng, 9)
    assert 'walk2_oracle' not in [r.name for r in check_graph('big', big, 0.1).results]


def test_random_graphs_pass(rng):
    for k in range(10):
        g = random_connected_graph(rng, int(rng.integers(3, 12)), weighted=True)
        assert check_graph(f'g{k}', g, 0.5).passed


def test_zero_degree_rows_are_inactive(p3):
    a2 = np.array([[0, 0, 1], [0, 0, 0], [1, 0, 0]], dtype=float)
    assert stationarity_residual(a2, np.array([0.5, 0.0, 0.5])) == 0.0
    assert stationarity_residual(a2, np.array([0.4, 0.2, 0.4])) > 0.1


def test_stored_bundle_passes_and_perturbed_fails(disconnected4):
    bundle = process_graph('pairs', disconnected4, ViewSelection.parse('x1,x2,xg', 0.1))
    assert check_bundle(bundle).passed

    document = json_safe(bundle_to_document(bundle))
    document['views']['walk1']['stationary'][0] += 1e-3
    report = check_bundle(document_to_bundle(document))
    failed = {r.name for r in report.failures()}
    assert {'walk1_mass', 'walk1_stationarity', 'walk1_scaled_features'} <= failed
    assert not any(name.startswith(WalkKind.WALK2.value) for name in failed)


def test_summary_counts(p3):
    good = check_graph('p3', p3, 0.1)
    bad = check_graph('p3', p3, 0.1)
    bad.add('forced', 1.0, 0.0)
    assert summarize_reports([good, bad]) == {'graphs': 2, 'passed': 1, 'failed': 1, 'errors': 0}


def test_stationary_of_wrong_length_is_a_failed_check(p3):
    bundle = process_graph('p3', p3, ViewSelection.parse('x1,x2', 0.1))
    document = json_safe(bundle_to_document(bundle))
    document['views']['walk1']['stationary'].append(0.0)
    report = check_bundle(document_to_bundle(document))
    assert report.error is None
    assert [r.name for r in report.failures()] == ['walk1_shape']
