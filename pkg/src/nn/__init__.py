# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Layers for the residual backbone and the pooling primitives used by heads.
"""

from .backbone import Backbone, BackboneConfig, build_backbone
from .functional import FeatureMap, batch_norm, conv2d
from .layers import BatchNorm2d, Conv2d, Linear, ResidualBlock
from .module import Module, kaiming_normal
from .pooling import (
    concat_gap_gmp,
    global_avg_pool,
    global_max_pool,
    local_avg_pool,
    pooled_extent,
    window_bounds,
)

__all__ = [
    "Backbone",
    "BackboneConfig",
    "build_backbone",
    "FeatureMap",
    "batch_norm",
    "conv2d",
    "BatchNorm2d",
    "Conv2d",
    "Linear",
    "ResidualBlock",
    "Module",
    "kaiming_normal",
    "concat_gap_gmp",
    "global_avg_pool",
    "global_max_pool",
    "local_avg_pool",
    "pooled_extent",
    "window_bounds",
]
