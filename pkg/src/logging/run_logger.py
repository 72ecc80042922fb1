# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Structured run events.

``RunLogger`` writes run lifecycle events and per-epoch summaries to the
``dap_pool.runs`` channel and timed sections to ``dap_pool.performance``.
Every record carries its payload under ``run_event`` / ``metric`` so the
JSON formatter emits it verbatim.
"""

import logging
import time
import uuid
from contextlib import contextmanager
from dataclasses import asdict, dataclass, field
from datetime import datetime
from typing import Any, Dict, Optional, Sequence

from .config import PERFORMANCE_CHANNEL, RUNS_CHANNEL


@dataclass
class RunEvent:
    """Start, completion or failure of a command or training run."""

    event_id: str
    run_id: str
    timestamp: str
    event_type: str
    status: str  # started, completed, error
    metadata: Dict[str, Any] = field(default_factory=dict)
    duration_ms: Optional[float] = None
    error: Optional[str] = None


@dataclass
class EpochSummary:
    run_id: str
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    test_acc: Optional[float]
    routing_counts: list
    lambdas: list


class RunLogger:
    def __init__(self, run_id: Optional[str] = None):
        self.run_id = run_id or uuid.uuid4().hex[:12]
        self.run_channel = logging.getLogger(RUNS_CHANNEL)
        self.performance_channel = logging.getLogger(PERFORMANCE_CHANNEL)

    def log_run_event(
        self,
        event_type: str,
        status: str,
        metadata: Optional[Dict[str, Any]] = None,
        duration_ms: Optional[float] = None,
        error: Optional[str] = None,
    ) -> str:
        event = RunEvent(
            event_id=uuid.uuid4().hex,
            run_id=self.run_id,
            timestamp=datetime.now().isoformat(),
            event_type=event_type,
            status=status,
            metadata=metadata or {},
            duration_ms=duration_ms,
            error=error,
        )
        level = logging.ERROR if status == "error" else logging.INFO
        message = f"Run {event_type}: {status}"
        if error:
            message += f" - {error}"
        self.run_channel.log(
            level, message, extra={"run_id": self.run_id, "run_event": asdict(event)}
        )
        return event.event_id

    def log_epoch(
        self,
        epoch: int,
        lr: float,
        train_loss: float,
        train_acc: float,
        test_acc: Optional[float],
        routing_counts: Sequence[int],
        lambdas: Sequence[float],
    ) -> None:
        summary = EpochSummary(
            run_id=self.run_id,
            epoch=epoch,
            lr=lr,
            train_loss=train_loss,
            train_acc=train_acc,
            test_acc=test_acc,
            routing_counts=[int(c) for c in routing_counts],
            lambdas=[float(v) for v in lambdas],
        )
        test_text = "n/a" if test_acc is None else f"{test_acc:.4f}"
        self.run_channel.info(
            f"Epoch {epoch}: lr={lr:g} loss={train_loss:.4f} "
            f"train_acc={train_acc:.4f} test_acc={test_text}",
            extra={"run_id": self.run_id, "epoch_summary": asdict(summary)},
        )

    def log_performance_metric(
        self,
        metric_name: str,
        value: float,
        unit: str = "ms",
        metadata: Optional[Dict[str, Any]] = None,
    ) -> None:
        self.performance_channel.info(
            f"Performance metric {metric_name}: {value:.1f}{unit}",
            extra={
                "run_id": self.run_id,
                "metric_name": metric_name,
                "value": value,
                "unit": unit,
                "metadata": metadata or {},
            },
        )

    @contextmanager
    def timing(self, operation_name: str, **metadata):
        start_time = time.perf_counter()
        try:
            yield
        finally:
            duration = (time.perf_counter() - start_time) * 1000
            self.log_performance_metric(operation_name, duration, "ms", metadata)


_global_logger: Optional[RunLogger] = None


def get_run_logger(run_id: Optional[str] = None) -> RunLogger:
    """Get or create the shared run logger; a new run id replaces it."""
    global _global_logger
    if _global_logger is None or (run_id and _global_logger.run_id != run_id):
        _global_logger = RunLogger(run_id)
    return _global_logger
