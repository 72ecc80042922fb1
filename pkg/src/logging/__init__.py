# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Structured logging for dap-pool: console output, JSON log files per channel
and run/performance events.
"""

from .config import PERFORMANCE_CHANNEL, RUNS_CHANNEL, LoggingConfig, setup_logging
from .formatters import ConsoleFormatter, StructuredFormatter
from .handlers import DateRotatingFileHandler
from .run_logger import EpochSummary, RunEvent, RunLogger, get_run_logger

__all__ = [
    "PERFORMANCE_CHANNEL",
    "RUNS_CHANNEL",
    "LoggingConfig",
    "setup_logging",
    "ConsoleFormatter",
    "StructuredFormatter",
    "DateRotatingFileHandler",
    "EpochSummary",
    "RunEvent",
    "RunLogger",
    "get_run_logger",
]
