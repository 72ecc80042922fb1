# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Property checks: gradients, pooling/convolution oracles, routing and lambda contracts.
"""

from .oracles import (
    naive_conv2d,
    naive_global_avg_pool,
    naive_global_max_pool,
    naive_local_avg_pool,
    naive_window_starts,
)
from .suite import CHECKS, CheckResult, SuiteContext, SuiteReport, op_gradcheck_cases, run_suite

__all__ = [
    "naive_conv2d",
    "naive_global_avg_pool",
    "naive_global_max_pool",
    "naive_local_avg_pool",
    "naive_window_starts",
    "CHECKS",
    "CheckResult",
    "SuiteContext",
    "SuiteReport",
    "op_gradcheck_cases",
    "run_suite",
]
