# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

from .batching import BatchPlan, iterate_batches, sequential_batches
from .image_set import (
    LabeledImageSet,
    compute_channel_stats,
    denormalize,
    load_dataset,
    normalize,
    save_dataset,
    with_stats,
)
from .packing import PackSpec, load_pack_spec, pack_dataset
from .synthetic import SyntheticSpec, make_synthetic
from .tensor_format import decode_tensor, encode_tensor, load_tensor, save_tensor

__all__ = [
    "BatchPlan",
    "iterate_batches",
    "sequential_batches",
    "LabeledImageSet",
    "compute_channel_stats",
    "denormalize",
    "load_dataset",
    "normalize",
    "save_dataset",
    "with_stats",
    "PackSpec",
    "load_pack_spec",
    "pack_dataset",
    "SyntheticSpec",
    "make_synthetic",
    "decode_tensor",
    "encode_tensor",
    "load_tensor",
    "save_tensor",
]
