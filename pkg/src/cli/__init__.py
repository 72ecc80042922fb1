# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

from .commands import (
    cmd_compare,
    cmd_dataset_pack,
    cmd_evaluate,
    cmd_train,
    cmd_verify,
)
from .parser import build_parser

__all__ = [
    "cmd_compare",
    "cmd_dataset_pack",
    "cmd_evaluate",
    "cmd_train",
    "cmd_verify",
    "build_parser",
]
