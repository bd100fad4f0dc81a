"""
Persist experiment results into the SQL run registry and read them back.
"""

from typing import Dict, List, Optional

from db_connection import get_session, init_db
from models import ExperimentRun, SeedRun
from utils.graph_io import json_safe


def record_experiment(url: str, manifest_path: str, run_config, result, first_seed: int,
                      checkpoint_paths: Optional[Dict[int, str]] = None) -> int:
    """
    Store one ExperimentRun with a SeedRun per seed.

    Returns:
        id of the new ExperimentRun row
    """
    init_db(url)
    checkpoint_paths = checkpoint_paths or {}
    session = get_session(url)
    try:
        experiment = ExperimentRun(
            manifest_path=str(manifest_path),
            preset=run_config.preset,
            config=json_safe(run_config.snapshot()),
            first_seed=first_seed,
            seed_count=len(result.records),
            failed_seeds=result.failed_seeds,
            ensemble_metrics=json_safe(result.ensemble),
            summary_metrics=json_safe(result.summary),
        )
        for record in result.records:
            final = record.history[-1] if record.history else {}
            experiment.seeds.append(SeedRun(
                seed=record.seed,
                metrics=json_safe(record.metrics),
                epochs=len(record.history),
                final_train_loss=final.get('train_loss'),
                wall_time=record.wall_time,
                error=record.error,
                checkpoint_path=checkpoint_paths.get(record.seed),
            ))
        session.add(experiment)
        session.commit()
        print(f"✅ Experiment {experiment.id} recorded ({len(result.records)} seeds)")
        return experiment.id
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()


def list_runs(url: str) -> List[Dict]:
    init_db(url)
    session = get_session(url)
    try:
        runs = session.query(ExperimentRun).order_by(ExperimentRun.id).all()
        return [run.to_dict() for run in runs]
    finally:
        session.close()


def get_run(url: str, run_id: int) -> Optional[Dict]:
    init_db(url)
    session = get_session(url)
    try:
        run = session.query(ExperimentRun).filter(ExperimentRun.id == run_id).first()
        return run.to_dict(include_seeds=True) if run else None
    finally:
        session.close()
