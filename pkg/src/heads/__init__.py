# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Classification heads: dynamic attention pooling and the global-pool baselines.
"""

from .builder import HeadConfig, build_head
from .dap import (
    LAMBDA_FLOOR,
    ClassifierHead,
    DapHead,
    fuse_score,
    head_loss,
    head_sample_losses,
    head_softmax,
    project_lambdas,
    route_max_loss,
    route_per_sample,
    split_windows,
    update_lambdas,
)
from .global_pool import GlobalPoolHead
from .types import HeadKind, HeadOutputs, Prediction, Routing

__all__ = [
    "HeadConfig",
    "build_head",
    "LAMBDA_FLOOR",
    "ClassifierHead",
    "DapHead",
    "fuse_score",
    "head_loss",
    "head_sample_losses",
    "head_softmax",
    "project_lambdas",
    "route_max_loss",
    "route_per_sample",
    "split_windows",
    "update_lambdas",
    "GlobalPoolHead",
    "HeadKind",
    "HeadOutputs",
    "Prediction",
    "Routing",
]
