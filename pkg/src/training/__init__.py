# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Training loop, evaluation, metrics and checkpoints.
"""

from .checkpoint import CheckpointInfo, load_checkpoint, read_checkpoint_info, save_checkpoint
from .evaluation import EvaluationResult, evaluate, score_predictions
from .metrics import EpochMetrics, metrics_frame, read_metrics_csv, write_metrics_csv
from .optimizer import OptimizerState, lr_at, sgd_step
from .trainer import StepResult, TrainRun, build_model, dry_run_check, train, train_step

__all__ = [
    "CheckpointInfo",
    "load_checkpoint",
    "read_checkpoint_info",
    "save_checkpoint",
    "EvaluationResult",
    "evaluate",
    "score_predictions",
    "EpochMetrics",
    "metrics_frame",
    "read_metrics_csv",
    "write_metrics_csv",
    "OptimizerState",
    "lr_at",
    "sgd_step",
    "StepResult",
    "TrainRun",
    "build_model",
    "dry_run_check",
    "train",
    "train_step",
]
