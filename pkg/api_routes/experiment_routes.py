"""
experiment_routes.py

Read-only access to the run registry:

  GET /api/runs            every recorded experiment, oldest first
  GET /api/runs/<run_id>   one experiment with its per-seed rows
"""

from flask import Blueprint, current_app, jsonify

from utils.run_registry import get_run, list_runs

experiment_blueprint = Blueprint('experiment_blueprint', __name__)


def _registry_url():
    return current_app.config.get('REGISTRY_URL')


@experiment_blueprint.route('/api/runs', methods=['GET'])
def list_runs_route():
    url = _registry_url()
    if not url:
        return jsonify({'error': 'run registry is not configured'}), 503
    try:
        return jsonify({'runs': list_runs(url)}), 200
    except Exception as e:
        return jsonify({'error': str(e)}), 500


@experiment_blueprint.route('/api/runs/<int:run_id>', methods=['GET'])
def get_run_route(run_id):
    url = _registry_url()
    if not url:
        return jsonify({'error': 'run registry is not configured'}), 503
    try:
        run = get_run(url, run_id)
        if run is None:
            return jsonify({'error': 'Run not found'}), 404
        return jsonify(run), 200
    except Exception as e:
        return jsonify({'error': str(e)}), 500
