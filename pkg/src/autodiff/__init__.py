# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Dense tensor arithmetic with a dynamic reverse-mode differentiation tape.
"""

from .tensor import (
    DEFAULT_DTYPE,
    GradientSet,
    Node,
    Tape,
    Tensor,
    as_tensor,
    backward,
    current_tape,
    set_debug,
)
from .functions import (
    OPS,
    Function,
    add,
    add_bias,
    concat,
    elementwise,
    exp,
    getitem,
    log,
    matmul,
    mean,
    mul,
    pick,
    register_op,
    relu,
    reshape,
    scale,
    softmax,
    sub,
)
from .gradcheck import GradCheckResult, check_gradients, check_parameter_gradients

__all__ = [
    "DEFAULT_DTYPE",
    "GradientSet",
    "Node",
    "Tape",
    "Tensor",
    "as_tensor",
    "backward",
    "current_tape",
    "set_debug",
    "OPS",
    "Function",
    "add",
    "add_bias",
    "concat",
    "elementwise",
    "exp",
    "getitem",
    "log",
    "matmul",
    "mean",
    "mul",
    "pick",
    "register_op",
    "relu",
    "reshape",
    "scale",
    "softmax",
    "sub",
    "GradCheckResult",
    "check_gradients",
    "check_parameter_gradients",
]
