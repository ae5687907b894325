"""Pretraining and fine-tuning loops, model artifacts."""

from macp.training.artifacts import save_model, load_model, sidecar_path
from macp.training.trainer import TrainConfig, Trainer

__all__ = [
    'save_model',
    'load_model',
    'sidecar_path',
    'TrainConfig',
    'Trainer',
]
