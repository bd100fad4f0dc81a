"""
SQLAlchemy models for the experiment run registry.
One ExperimentRun per `train` invocation, one SeedRun per trained seed.
"""

from sqlalchemy import (
    Column, Integer, String, Float, DateTime, Text, ForeignKey, JSON
)
from sqlalchemy.ext.declarative import declarative_base
from sqlalchemy.orm import relationship
from datetime import datetime, timezone

Base = declarative_base()


# ============================================
# EXPERIMENT RUN MODEL
# ============================================
class ExperimentRun(Base):
    __tablename__ = 'experiment_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    manifest_path = Column(Text, nullable=False)
    preset = Column(String(64), nullable=True)
    config = Column(JSON, nullable=False)       # {preset, model, train} snapshot
    first_seed = Column(Integer, nullable=False)
    seed_count = Column(Integer, nullable=False)
    failed_seeds = Column(JSON, default=list)
    ensemble_metrics = Column(JSON, default=dict)
    summary_metrics = Column(JSON, default=dict)
    created_at = Column(DateTime(timezone=True), default=lambda: datetime.now(timezone.utc))

    seeds = relationship('SeedRun', back_populates='experiment', cascade='all, delete-orphan',
                         order_by='SeedRun.seed')

    def to_dict(self, include_seeds=False):
        data = {
            'id': self.id,
            'manifest_path': self.manifest_path,
            'preset': self.preset,
            'config': self.config,
            'first_seed': self.first_seed,
            'seed_count': self.seed_count,
            'failed_seeds': self.failed_seeds or [],
            'ensemble_metrics': self.ensemble_metrics or {},
            'summary_metrics': self.summary_metrics or {},
            'created_at': self.created_at.isoformat() if self.created_at else None,
        }
        if include_seeds:
            data['seeds'] = [s.to_dict() for s in self.seeds]
        return data

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, seeds={self.seed_count})>"


# ============================================
# SEED RUN MODEL
# ============================================
class SeedRun(Base):
    __tablename__ = 'seed_runs'

    id = Column(Integer, primary_key=True, autoincrement=True)
    experiment_id = Column(Integer, ForeignKey('experiment_runs.id', ondelete='CASCADE'), nullable=False, index=True)
    seed = Column(Integer, nullable=False)
    metrics = Column(JSON, default=dict)        # {split: {metric: value}}
    epochs = Column(Integer, default=0)
    final_train_loss = Column(Float, nullable=True)
    wall_time = Column(Float, default=0.0)
    error = Column(Text, nullable=True)
    checkpoint_path = Column(Text, nullable=True)

    experiment = relationship('ExperimentRun', back_populates='seeds')

    def to_dict(self):
        return {
            'seed': self.seed,
            'metrics': self.metrics or {},
            'epochs': self.epochs,
            'final_train_loss': self.final_train_loss,
            'wall_time': self.wall_time,
            'error': self.error,
            'checkpoint_path': self.checkpoint_path,
        }

    def __repr__(self):
        return f"<SeedRun(experiment={self.experiment_id}, seed={self.seed})>"
