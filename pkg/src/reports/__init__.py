# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

from .comparison import ComparisonReport, ComparisonRow, percent

__all__ = ["ComparisonReport", "ComparisonRow", "percent"]
