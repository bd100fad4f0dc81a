from dotenv import load_dotenv
load_dotenv()

import json
import sys
from pathlib import Path

import click
from flask import Flask
from flask_cors import CORS

from api_routes.experiment_routes import experiment_blueprint
from api_routes.walk_routes import walk_blueprint
from config import REGISTRY_URL_ENV, default_output_dir, default_registry_url, load_run_config
from utils.checks import CheckReport, check_bundle, check_graph, summarize_reports
from utils.errors import DimensionMismatch, DocumentError, WalkViewError
from utils.features import PoolingSpec, ViewSelection, fingerprint_bundle
from utils.graph_io import (
    bundle_filenames, bundle_to_document, document_to_bundle, is_bundle_document, load_checkpoint,
    load_manifest, parse_graph_document, read_documents, write_checkpoint, write_fingerprint_csv,
    write_json, write_jsonl, write_metrics_csv
)
from utils.pipeline import (
    SPLITS, build_datasets, documents_to_graphs, process_dataset, run_experiment, split_metrics
)
from utils.repair import repair
from utils.run_registry import record_experiment
from utils.spectral import DEFAULT_GAMMA, check_gamma

EXIT_OK = 0
EXIT_FATAL = 1
EXIT_PARTIAL = 2
EXIT_INVARIANT = 3


# ============================================
# FLASK APPLICATION
# ============================================

def create_app(registry_url=None):
    app = Flask(__name__)

    CORS(app, resources={
        r"/*": {
            "origins": "*",
            "methods": ["GET", "POST", "OPTIONS"],
            "allow_headers": ["Content-Type"]
        }
    })

    app.config['REGISTRY_URL'] = registry_url or default_registry_url()

    app.register_blueprint(walk_blueprint)
    app.register_blueprint(experiment_blueprint)

    @app.route('/test', methods=['GET'])
    def test_route():
        return {"message": "API is up and running"}, 200

    return app


# ============================================
# HELPERS
# ============================================

def _fail(e):
    if isinstance(e, WalkViewError):
        click.echo(f"❌ {e.code}: {e}", err=True)
    else:
        click.echo(f"❌ {type(e).__name__}: {e}", err=True)
    return EXIT_FATAL


def _load_vocabulary(path):
    if path is None:
        return None
    try:
        data = json.loads(Path(path).read_text(encoding='utf-8'))
    except json.JSONDecodeError as e:
        raise DocumentError(f"{path}: not valid JSON ({e.msg})") from e
    if not isinstance(data, dict):
        raise DocumentError(f"{path}: vocabulary must map attribute -> list of values")
    return data


def _load_graphs(inputs, vocabulary=None):
    """(id, AttributedGraph or error) for every graph document under inputs, in input order."""
    documents, failed = [], []
    for loaded in read_documents(inputs):
        if loaded.error:
            failed.append((loaded.source, DocumentError(loaded.error)))
            continue
        try:
            documents.append(parse_graph_document(loaded.data))
        except WalkViewError as e:
            failed.append((loaded.data.get('id', loaded.source), e))
    return failed + documents_to_graphs(documents, vocabulary)


def _output_dir(output):
    return Path(output or default_output_dir())


# ============================================
# CLI
# ============================================

@click.group()
def cli():
    """walkview: walk-view graph features, fingerprints and shallow models."""


@cli.command('process')
@click.option('--input', 'inputs', multiple=True, required=True, type=click.Path(),
              help='Graph document file or directory (repeatable).')
@click.option('--output', default=None, help='Directory for bundle files (default $WALKVIEW_OUTPUT_DIR).')
@click.option('--gamma', type=float, default=DEFAULT_GAMMA, show_default=True, help='Fractional walk exponent in (0, 1].')
@click.option('--views', default='x1,x2,xg', show_default=True, help='Views to build: any of x, x1, x2, xg.')
@click.option('--workers', type=int, default=1, show_default=True, help='Worker threads.')
@click.option('--vocabulary', default=None, type=click.Path(), help='JSON attribute -> values map for one-hot encoding.')
@click.option('--quiet', is_flag=True, help='Only print errors.')
def process_command(inputs, output, gamma, views, workers, vocabulary, quiet):
    """Repair graphs and write one view bundle per graph."""
    try:
        selection = ViewSelection.parse(views, gamma)
        graphs = _load_graphs(inputs, _load_vocabulary(vocabulary))
    except (WalkViewError, OSError) as e:
        return _fail(e)

    result = process_dataset(graphs, selection, workers=workers, verbose=not quiet)
    out_dir = _output_dir(output)
    try:
        names = bundle_filenames([b.graph_id for b in result.bundles])
        for bundle in result.bundles:
            write_json(out_dir / names[bundle.graph_id], bundle_to_document(bundle))
        if result.errors:
            write_json(out_dir / 'errors.json', {'errors': result.errors})
    except (WalkViewError, OSError) as e:
        return _fail(e)

    if not quiet:
        click.echo(f"📁 {len(result.bundles)} bundles written to {out_dir}")
    if result.errors:
        for error in result.errors:
            click.echo(f"⚠️ {error['id']}: {error['error']}: {error['message']}", err=True)
        return EXIT_PARTIAL
    return EXIT_OK


@cli.command('fingerprint')
@click.option('--input', 'inputs', multiple=True, required=True, type=click.Path(),
              help='Graph document file or directory (repeatable).')
@click.option('--output', default=None, help='CSV output path (default $WALKVIEW_OUTPUT_DIR/fingerprints.csv).')
@click.option('--views', default='x1,x2,xg', show_default=True, help='Views to pool: any of x, x1, x2, xg.')
@click.option('--pooling', default='mean', show_default=True,
              help="Pooling: 'mean' for all views, 'mean,max' per view, 'mean+max' several per view.")
@click.option('--gamma', type=float, default=DEFAULT_GAMMA, show_default=True, help='Fractional walk exponent in (0, 1].')
@click.option('--jsonl', default=None, help='Also write fingerprint records as JSON lines.')
@click.option('--workers', type=int, default=1, show_default=True, help='Worker threads.')
@click.option('--vocabulary', default=None, type=click.Path(), help='JSON attribute -> values map for one-hot encoding.')
@click.option('--quiet', is_flag=True, help='Only print errors.')
def fingerprint_command(inputs, output, views, pooling, gamma, jsonl, workers, vocabulary, quiet):
    """Write one fingerprint row per graph: id,v0..v(k-1)."""
    try:
        selection = ViewSelection.parse(views, gamma)
        pools = PoolingSpec.parse(pooling, len(selection.views))
        graphs = _load_graphs(inputs, _load_vocabulary(vocabulary))
    except (WalkViewError, OSError) as e:
        return _fail(e)

    result = process_dataset(graphs, selection, workers=workers, verbose=not quiet)
    fingerprints = [fingerprint_bundle(b, selection, pools) for b in result.bundles]
    out_path = Path(output) if output else _output_dir(None) / 'fingerprints.csv'
    try:
        write_fingerprint_csv(out_path, [(fp.graph_id, fp.values) for fp in fingerprints])
        if jsonl:
            write_jsonl(jsonl, [fp.to_record() for fp in fingerprints])
        if result.errors:
            write_json(out_path.with_name(out_path.name + '.errors.json'), {'errors': result.errors})
    except OSError as e:
        return _fail(e)

    if not quiet:
        click.echo(f"📁 {len(fingerprints)} fingerprints written to {out_path}")
    if result.errors:
        for error in result.errors:
            click.echo(f"⚠️ {error['id']}: {error['error']}: {error['message']}", err=True)
        return EXIT_PARTIAL
    return EXIT_OK


@cli.command('train')
@click.option('--manifest', required=True, type=click.Path(), help='JSON-lines dataset manifest.')
@click.option('--config', 'config_path', default=None, type=click.Path(), help='JSON run config {preset, model, train}.')
@click.option('--seed', type=int, default=0, show_default=True, help='First seed.')
@click.option('--seeds', type=click.IntRange(min=1), default=1, show_default=True, help='Number of seeds.')
@click.option('--checkpoint-out', default=None, help='Checkpoint directory (default $WALKVIEW_OUTPUT_DIR/checkpoints).')
@click.option('--metrics-out', default=None, help='Metrics CSV (default $WALKVIEW_OUTPUT_DIR/metrics.csv).')
@click.option('--run-record', default=None, help='Run record JSON (default <checkpoint-out>/run_record.json).')
@click.option('--registry-url', default=None, envvar=REGISTRY_URL_ENV,
              help='SQLAlchemy URL of a run registry, e.g. sqlite:///runs.db (default $WALKVIEW_REGISTRY_URL).')
@click.option('--workers', type=int, default=1, show_default=True, help='Worker threads.')
@click.option('--quiet', is_flag=True, help='Only print errors.')
def train_command(manifest, config_path, seed, seeds, checkpoint_out, metrics_out, run_record,
                  registry_url, workers, quiet):
    """Train one model per seed, evaluate each and their ensemble."""
    try:
        run_config = load_run_config(config_path)
        loaded = load_manifest(manifest)
        result = run_experiment(loaded, run_config, seed=seed, n_seeds=seeds, workers=workers, verbose=not quiet)
    except (WalkViewError, OSError) as e:
        return _fail(e)

    checkpoint_dir = Path(checkpoint_out) if checkpoint_out else _output_dir(None) / 'checkpoints'
    metrics_path = Path(metrics_out) if metrics_out else _output_dir(None) / 'metrics.csv'
    record_path = Path(run_record) if run_record else checkpoint_dir / 'run_record.json'
    checkpoints = {}
    try:
        for s in sorted(result.models):
            path = checkpoint_dir / f'seed_{s}.json'
            write_checkpoint(path, result.models[s], s, run_config.snapshot())
            checkpoints[s] = str(path)
        write_metrics_csv(metrics_path, result.metric_rows())
        write_json(record_path, {
            'manifest': str(manifest),
            'config': run_config.snapshot(),
            'records': [r.to_dict() for r in result.records],
            'summary': result.summary,
            'ensemble': result.ensemble,
            'failed_seeds': result.failed_seeds,
            'process_errors': result.process_errors,
        })
    except OSError as e:
        return _fail(e)

    if registry_url:
        try:
            record_experiment(registry_url, manifest, run_config, result, seed, checkpoints)
        except Exception as e:
            click.echo(f"⚠️ Could not record run in registry: {e}", err=True)

    if not quiet:
        click.echo(f"📁 {len(checkpoints)} checkpoints in {checkpoint_dir}, metrics in {metrics_path}")
    if not result.models:
        click.echo("❌ No seed trained successfully", err=True)
        return EXIT_FATAL
    if result.failed_seeds or result.process_errors:
        return EXIT_PARTIAL
    return EXIT_OK


@cli.command('eval')
@click.option('--manifest', required=True, type=click.Path(), help='JSON-lines dataset manifest.')
@click.option('--checkpoint-in', 'checkpoints', multiple=True, required=True, type=click.Path(),
              help='Checkpoint file (repeatable; several form an ensemble).')
@click.option('--metrics-out', default=None, help='Metrics CSV (default $WALKVIEW_OUTPUT_DIR/eval_metrics.csv).')
@click.option('--workers', type=int, default=1, show_default=True, help='Worker threads.')
@click.option('--quiet', is_flag=True, help='Only print errors.')
def eval_command(manifest, checkpoints, metrics_out, workers, quiet):
    """Evaluate trained checkpoints, individually and as an ensemble."""
    try:
        loaded = [load_checkpoint(path) for path in checkpoints]
        models = [model for model, _ in loaded]
        for other in models[1:]:
            if not models[0].same_architecture(other):
                raise DimensionMismatch("checkpoints do not share one model configuration")
        selection = models[0].selection
        data = load_manifest(manifest)
        graphs = documents_to_graphs([e.document for e in data.entries])
        graphs = [(entry.graph_id, g) for entry, (_, g) in zip(data.entries, graphs)]
        processed = process_dataset(graphs, selection, workers=workers, verbose=not quiet)
        datasets = build_datasets(processed.bundles, data, selection)
        task = models[0].config.task
        if data.task_count and data.task_count != models[0].config.output_dim:
            raise DimensionMismatch(
                f"manifest labels have {data.task_count} tasks, checkpoint output_dim is {models[0].config.output_dim}"
            )

        rows = []
        scopes = [('seed', s, [model]) for model, s in loaded] + [('ensemble', None, models)]
        for scope, s, members in scopes:
            for split in SPLITS:
                metrics = split_metrics(members, datasets[split], task)
                rows.extend({'scope': scope, 'seed': s, 'split': split, 'metric': k, 'value': v}
                            for k, v in metrics.items())
    except (WalkViewError, OSError) as e:
        return _fail(e)

    metrics_path = Path(metrics_out) if metrics_out else _output_dir(None) / 'eval_metrics.csv'
    try:
        write_metrics_csv(metrics_path, rows)
    except OSError as e:
        return _fail(e)
    if not quiet:
        click.echo(f"📊 {len(rows)} metric values written to {metrics_path}")
    if processed.errors or data.errors:
        return EXIT_PARTIAL
    return EXIT_OK


@cli.command('check')
@click.option('--input', 'inputs', multiple=True, required=True, type=click.Path(),
              help='Graph or bundle document file or directory (repeatable).')
@click.option('--gamma', type=float, default=DEFAULT_GAMMA, show_default=True, help='Fractional walk exponent in (0, 1].')
def check_command(inputs, gamma):
    """Run the invariant suite; exit 3 if any check fails."""
    try:
        gamma = check_gamma(gamma)
        loaded = read_documents(inputs)
    except (WalkViewError, OSError) as e:
        return _fail(e)

    reports = []
    for item in loaded:
        graph_id = item.source
        try:
            if item.error:
                raise DocumentError(item.error)
            if is_bundle_document(item.data):
                bundle = document_to_bundle(item.data)
                reports.append(check_bundle(bundle))
                continue
            document = parse_graph_document(item.data)
            graph_id = document.id
            repaired, _ = repair(document.to_graph())
            reports.append(check_graph(graph_id, repaired, gamma))
        except WalkViewError as e:
            reports.append(CheckReport(graph_id, error=f"{e.code}: {e}"))

    click.echo(f"{'graph':<24} {'check':<32} {'value':>12} {'tolerance':>10}  status")
    for report in reports:
        if report.error:
            click.echo(f"{report.graph_id:<24} {'load':<32} {'':>12} {'':>10}  ERROR {report.error}")
        for r in report.results:
            status = 'ok' if r.passed else 'FAIL'
            click.echo(f"{report.graph_id:<24} {r.name:<32} {r.value:>12.3e} {r.tolerance:>10.0e}  {status}")

    totals = summarize_reports(reports)
    click.echo(f"📊 {totals['passed']}/{totals['graphs']} graphs passed, "
               f"{totals['failed']} failed, {totals['errors']} errors")
    if totals['failed']:
        for report in reports:
            for r in report.failures():
                click.echo(f"❌ {report.graph_id}: {r.name} = {r.value:.3e} > {r.tolerance:.0e}", err=True)
        return EXIT_INVARIANT
    if totals['errors']:
        return EXIT_PARTIAL
    return EXIT_OK


@cli.command('serve')
@click.option('--host', default='127.0.0.1', show_default=True)
@click.option('--port', type=int, default=5000, show_default=True)
@click.option('--registry-url', default=None, envvar=REGISTRY_URL_ENV, help='SQLAlchemy URL of the run registry.')
def serve_command(host, port, registry_url):
    """Serve the HTTP API."""
    create_app(registry_url).run(host=host, port=port)
    return EXIT_OK


def run_cli(argv=None):
    """Run the CLI and return its exit code (usage errors map to 1)."""
    try:
        result = cli.main(args=argv, prog_name='walkview', standalone_mode=False)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.ClickException as e:
        e.show()
        return EXIT_FATAL
    except click.exceptions.Abort:
        return EXIT_FATAL
    return result if isinstance(result, int) else EXIT_OK


if __name__ == '__main__':
    sys.exit(run_cli())
