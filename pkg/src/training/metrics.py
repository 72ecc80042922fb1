# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np
import pandas as pd

logger = logging.getLogger(__name__)

METRICS_NAME = "metrics.csv"
BASE_COLUMNS = ["epoch", "lr", "train_loss", "train_acc", "test_acc", "routed_head_histogram"]


@dataclass
class EpochMetrics:
    epoch: int
    lr: float
    train_loss: float
    train_acc: float
    test_acc: Optional[float]
    routing_counts: list[int]
    lambdas: list[float] = field(default_factory=list)

    def histogram_text(self) -> str:
        return ";".join(str(int(c)) for c in self.routing_counts)

    def to_row(self) -> dict:
        row = {
            "epoch": self.epoch,
            "lr": self.lr,
            "train_loss": self.train_loss,
            "train_acc": self.train_acc,
            "test_acc": self.test_acc if self.test_acc is not None else np.nan,
            "routed_head_histogram": self.histogram_text(),
        }
        for i, value in enumerate(self.lambdas, start=1):
            row[f"lambda_{i}"] = value
        return row


def metrics_frame(history: Sequence[EpochMetrics]) -> pd.DataFrame:
    frame = pd.DataFrame([m.to_row() for m in history])
    if frame.empty:
        return pd.DataFrame(columns=BASE_COLUMNS)
    return frame


def write_metrics_csv(history: Sequence[EpochMetrics], path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    metrics_frame(history).to_csv(path, index=False, float_format="%.10g", na_rep="")
    logger.debug(f"Wrote {len(history)} metric rows to {path}")
    return path


def read_metrics_csv(path: Union[str, Path]) -> pd.DataFrame:
    return pd.read_csv(path, dtype={"routed_head_histogram": str})


def lambda_columns(frame: pd.DataFrame) -> list[str]:
    return [c for c in frame.columns if c.startswith("lambda_")]
