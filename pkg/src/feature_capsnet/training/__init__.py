"""
Training package for feature-capsnet

- adam: the optimizer
- engine: epoch loop, model selection and evaluation
- checkpoint: parameter files and their manifest section
- metrics: per-epoch metric log
- manifest: run manifest written next to every checkpoint
"""

from .adam import Adam, AdamState, adam_step
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .engine import EvalResult, TrainResult, evaluate, train
from .manifest import RunManifest, read_manifest
from .metrics import EpochMetrics, MetricLog

__all__ = [
    "Adam",
    "AdamState",
    "Checkpoint",
    "EpochMetrics",
    "EvalResult",
    "MetricLog",
    "RunManifest",
    "TrainResult",
    "adam_step",
    "evaluate",
    "load_checkpoint",
    "read_manifest",
    "save_checkpoint",
    "train",
]
