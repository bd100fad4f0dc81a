# config.py
"""
Run configuration: environment lookup, JSON config files for `train`, and
named presets for the published training protocols.

A config file looks like

    {"preset": "fuel-properties", "model": {"hidden_dim": 50}, "train": {"epochs": 20}}

Preset values are applied first, explicit keys override them.
"""

import json
import os
from pathlib import Path
from typing import Any, Dict, Optional, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError

from utils.errors import DocumentError
from utils.shallow_model import ModelConfig
from utils.training import TrainConfig

OUTPUT_DIR_ENV = 'WALKVIEW_OUTPUT_DIR'
REGISTRY_URL_ENV = 'WALKVIEW_REGISTRY_URL'

# ============================================
# PRESETS
# ============================================

PRESETS: Dict[str, Dict[str, Dict[str, Any]]] = {
    'ogb-classification': {
        'model': {'hidden_dim': 300, 'graphnorm': True, 'pooling': 'mean', 'task': 'binary_classification'},
        'train': {'optimizer': 'adam', 'batch_size': 32, 'epochs': 100, 'loss': 'bce_with_logits'},
    },
    'ogb-regression': {
        'model': {'hidden_dim': 300, 'graphnorm': True, 'pooling': 'mean', 'task': 'regression'},
        'train': {'optimizer': 'adam', 'batch_size': 32, 'epochs': 300, 'loss': 'mse'},
    },
    'ogb-molhiv': {
        'model': {'views': ['x2'], 'hidden_dim': 1000, 'graphnorm': False, 'pooling': 'mean',
                  'task': 'binary_classification'},
        'train': {'optimizer': 'adam', 'batch_size': 32, 'epochs': 50, 'loss': 'bce_with_logits'},
    },
    'fuel-properties': {
        'model': {'views': ['x1', 'x2', 'xg'], 'hidden_dim': 100, 'graphnorm': True, 'activation': 'relu',
                  'pooling': 'sum', 'task': 'regression'},
        'train': {'optimizer': 'adamw', 'learning_rate': 0.01, 'batch_size': 64, 'epochs': 200,
                  'scheduler': 'plateau', 'loss': 'mse'},
    },
    'bioaccumulation': {
        'model': {'views': ['x1', 'x2', 'xg'], 'hidden_dim': 100, 'graphnorm': True, 'activation': 'relu',
                  'pooling': 'sum', 'task': 'regression'},
        'train': {'optimizer': 'adamw', 'learning_rate': 0.01, 'batch_size': 64, 'epochs': 200,
                  'scheduler': 'step', 'loss': 'mse'},
    },
}


class RunConfig(BaseModel):
    model_config = ConfigDict(extra='forbid')

    preset: Optional[str] = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    train: TrainConfig = Field(default_factory=TrainConfig)

    def snapshot(self) -> Dict[str, Any]:
        return {'preset': self.preset, 'model': self.model.model_dump(), 'train': self.train.model_dump()}


def build_run_config(document: Dict[str, Any]) -> RunConfig:
    """
    Merge a config document over its preset and validate it.

    Raises:
        DocumentError: unknown preset, unknown keys or invalid values
    """
    if not isinstance(document, dict):
        raise DocumentError("config must be a JSON object")
    unknown = set(document) - {'preset', 'model', 'train'}
    if unknown:
        raise DocumentError(f"unknown config keys: {sorted(unknown)}")
    preset = document.get('preset')
    base = {'model': {}, 'train': {}}
    if preset is not None:
        if preset not in PRESETS:
            raise DocumentError(f"unknown preset '{preset}' (available: {', '.join(sorted(PRESETS))})")
        base = {section: dict(values) for section, values in PRESETS[preset].items()}
    for section in ('model', 'train'):
        base[section].update(document.get(section) or {})
    try:
        return RunConfig(preset=preset, model=ModelConfig(**base['model']), train=TrainConfig(**base['train']))
    except ValidationError as e:
        raise DocumentError(f"invalid config: {e}") from e


def load_run_config(path: Union[str, Path, None]) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        with open(path, 'r', encoding='utf-8') as f:
            document = json.load(f)
    except json.JSONDecodeError as e:
        raise DocumentError(f"{path}: not valid JSON ({e})") from e
    return build_run_config(document)


def default_output_dir(fallback: str = 'walkview_output') -> str:
    """Output directory when --output is omitted: $WALKVIEW_OUTPUT_DIR, else fallback."""
    return os.getenv(OUTPUT_DIR_ENV) or fallback


def default_registry_url() -> Optional[str]:
    """SQLAlchemy URL of the run registry from $WALKVIEW_REGISTRY_URL, or None."""
    return os.getenv(REGISTRY_URL_ENV) or None
