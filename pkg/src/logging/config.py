# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Logging configuration and setup for dap-pool runs.
"""

import logging
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .formatters import ConsoleFormatter, StructuredFormatter
from .handlers import DateRotatingFileHandler

RUNS_CHANNEL = "dap_pool.runs"
PERFORMANCE_CHANNEL = "dap_pool.performance"


def _env_flag(name: str, default: str = "true") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


@dataclass
class LoggingConfig:
    """Where and how verbosely dap-pool writes its logs."""

    log_dir: str = "logs"

    # Files are optional; the console handler is always installed.
    log_to_files: bool = True

    # Run events: start/finish, epoch summaries, lambda and routing
    enable_run_logging: bool = True
    run_log_level: str = "INFO"

    system_log_level: str = "INFO"
    console_level: str = "WARNING"

    max_log_files: int = 30

    enable_performance_logging: bool = True

    @classmethod
    def from_env(cls) -> "LoggingConfig":
        """Create logging config from DAP_* environment variables."""
        return cls(
            log_dir=os.getenv("DAP_LOG_DIR", "logs"),
            log_to_files=_env_flag("DAP_LOG_TO_FILES"),
            enable_run_logging=_env_flag("DAP_LOG_RUNS"),
            run_log_level=os.getenv("DAP_RUN_LOG_LEVEL", "INFO").upper(),
            system_log_level=os.getenv("DAP_SYSTEM_LOG_LEVEL", "INFO").upper(),
            max_log_files=int(os.getenv("DAP_MAX_LOG_FILES", "30")),
            enable_performance_logging=_env_flag("DAP_LOG_PERFORMANCE"),
        )


def _level(name: str) -> int:
    level = logging.getLevelName(name.upper())
    return level if isinstance(level, int) else logging.INFO


def setup_logging(config: Optional[LoggingConfig] = None) -> None:
    """Install console and (optionally) per-channel JSON file handlers."""
    if config is None:
        config = LoggingConfig.from_env()

    root_logger = logging.getLogger()
    root_logger.setLevel(min(_level(config.system_log_level), _level(config.console_level)))
    for handler in root_logger.handlers[:]:
        root_logger.removeHandler(handler)

    console_handler = logging.StreamHandler()
    console_handler.setFormatter(ConsoleFormatter())
    console_handler.setLevel(_level(config.console_level))
    root_logger.addHandler(console_handler)

    if config.log_to_files:
        system_handler = DateRotatingFileHandler(
            Path(config.log_dir) / "system" / "system.log", max_files=config.max_log_files
        )
        system_handler.setFormatter(StructuredFormatter())
        system_handler.setLevel(_level(config.system_log_level))
        root_logger.addHandler(system_handler)

    _setup_channel(
        RUNS_CHANNEL, "runs", config.enable_run_logging, _level(config.run_log_level), config
    )
    _setup_channel(
        PERFORMANCE_CHANNEL,
        "performance",
        config.enable_performance_logging,
        logging.INFO,
        config,
    )


def _setup_channel(
    name: str, subdir: str, enabled: bool, level: int, config: LoggingConfig
) -> None:
    logger = logging.getLogger(name)
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
    # Channels also reach the console through the root logger.
    logger.propagate = True
    if not enabled:
        logger.setLevel(logging.CRITICAL + 1)
        return
    logger.setLevel(level)
    if not config.log_to_files:
        return
    handler = DateRotatingFileHandler(
        Path(config.log_dir) / subdir / f"{subdir}.log", max_files=config.max_log_files
    )
    handler.setFormatter(StructuredFormatter())
    logger.addHandler(handler)
