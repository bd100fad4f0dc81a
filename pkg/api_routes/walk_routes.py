"""
walk_routes.py

Single-graph endpoints:

  POST /api/graphs/process      repair one graph document and return its view bundle
  POST /api/graphs/fingerprint  pooled fingerprint of one graph document
  POST /api/graphs/check        invariant report for one graph document

Request bodies carry the graph under "graph" plus optional "gamma",
"views", "pooling". Library errors come back as 400 with the error code.
"""

from flask import Blueprint, request, jsonify

from utils.checks import check_graph
from utils.errors import DocumentError, WalkViewError
from utils.features import PoolingSpec, ViewSelection, fingerprint_bundle
from utils.graph_io import json_safe, bundle_to_document, parse_graph_document
from utils.pipeline import process_graph
from utils.repair import repair
from utils.spectral import DEFAULT_GAMMA

walk_blueprint = Blueprint('walk_blueprint', __name__)


def _request_graph(data):
    if not isinstance(data, dict) or 'graph' not in data:
        raise DocumentError("request body must be a JSON object with a 'graph' document")
    document = parse_graph_document(data['graph'])
    return document.id, document.to_graph()


def _error_response(e):
    if isinstance(e, WalkViewError):
        return jsonify(e.to_dict()), 400
    return jsonify({'error': str(e)}), 500


@walk_blueprint.route('/api/graphs/process', methods=['POST'])
def process_graph_route():
    try:
        data = request.get_json(silent=True)
        graph_id, g = _request_graph(data)
        selection = ViewSelection.parse(data.get('views', 'x1,x2,xg'), data.get('gamma', DEFAULT_GAMMA))
        bundle = process_graph(graph_id, g, selection)
        return jsonify(json_safe(bundle_to_document(bundle))), 200
    except Exception as e:
        return _error_response(e)


@walk_blueprint.route('/api/graphs/fingerprint', methods=['POST'])
def fingerprint_graph_route():
    try:
        data = request.get_json(silent=True)
        graph_id, g = _request_graph(data)
        selection = ViewSelection.parse(data.get('views', 'x1,x2,xg'), data.get('gamma', DEFAULT_GAMMA))
        pooling = PoolingSpec.parse(data.get('pooling', 'mean'), len(selection.views))
        bundle = process_graph(graph_id, g, selection)
        return jsonify(json_safe(fingerprint_bundle(bundle, selection, pooling).to_record())), 200
    except Exception as e:
        return _error_response(e)


@walk_blueprint.route('/api/graphs/check', methods=['POST'])
def check_graph_route():
    try:
        data = request.get_json(silent=True)
        graph_id, g = _request_graph(data)
        repaired, record = repair(g)
        report = check_graph(graph_id, repaired, float(data.get('gamma', DEFAULT_GAMMA)))
        return jsonify(json_safe({
            'id': graph_id,
            'passed': report.passed,
            'repair': record.to_dict(),
            'checks': [r.to_dict() for r in report.results],
        })), 200
    except Exception as e:
        return _error_response(e)
