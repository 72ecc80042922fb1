# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Formatters for dap-pool logs.
"""

import json
import logging
from datetime import datetime

import numpy as np

_RESERVED = {
    "name", "levelname", "levelno", "pathname", "filename", "module", "exc_info",
    "exc_text", "stack_info", "lineno", "funcName", "created", "msecs",
    "relativeCreated", "thread", "threadName", "processName", "process",
    "taskName", "getMessage", "msg", "args",
}


def _jsonable(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    return str(value)


class StructuredFormatter(logging.Formatter):
    """One JSON object per line, including any ``extra`` fields of the record."""

    def format(self, record: logging.LogRecord) -> str:
        log_data = {
            "timestamp": datetime.fromtimestamp(record.created).isoformat(),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
        }
        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)
        for key, value in record.__dict__.items():
            if key not in _RESERVED and key not in log_data:
                log_data[key] = value
        return json.dumps(log_data, ensure_ascii=False, default=_jsonable)


class ConsoleFormatter(logging.Formatter):
    """Compact human-readable console lines; run events show their run id."""

    def __init__(self):
        super().__init__("%(asctime)s - %(name)s - %(levelname)s - %(message)s")

    def format(self, record: logging.LogRecord) -> str:
        line = super().format(record)
        run_id = getattr(record, "run_id", None)
        return f"{line} [run {run_id}]" if run_id else line
