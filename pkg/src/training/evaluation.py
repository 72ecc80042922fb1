# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Union

import numpy as np
import pandas as pd

from src.datasets.batching import sequential_batches
from src.datasets.image_set import LabeledImageSet
from src.heads.dap import ClassifierHead
from src.nn.backbone import Backbone

logger = logging.getLogger(__name__)


@dataclass
class EvaluationResult:
    accuracy: float
    per_class: np.ndarray
    predictions: np.ndarray

    @property
    def num_samples(self) -> int:
        return int(self.predictions.size)

    def to_frame(self) -> pd.DataFrame:
        rows = [{"class": "all", "accuracy": self.accuracy}]
        rows += [{"class": str(c), "accuracy": acc} for c, acc in enumerate(self.per_class)]
        return pd.DataFrame(rows)

    def write_csv(self, path: Union[str, Path]) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(path, index=False, float_format="%.10g", na_rep="")
        return path


def score_predictions(
    predictions: np.ndarray, labels: np.ndarray, num_classes: int
) -> EvaluationResult:
    """Top-1 and per-class accuracy; classes absent from ``labels`` get NaN."""
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    correct = predictions == labels
    totals = np.bincount(labels, minlength=num_classes)
    hits = np.bincount(labels, weights=correct, minlength=num_classes)
    with np.errstate(invalid="ignore", divide="ignore"):
        per_class = np.where(totals > 0, hits / np.maximum(totals, 1), np.nan)
    return EvaluationResult(
        accuracy=float(correct.mean()), per_class=per_class, predictions=predictions
    )


def evaluate(
    backbone: Backbone,
    head: ClassifierHead,
    dataset: LabeledImageSet,
    batch_size: int = 64,
    workers: int = 0,
) -> EvaluationResult:
    """Fused-score accuracy in eval mode; batches may be spread over threads."""
    was_training = backbone.training, head.training
    backbone.eval()
    head.eval()

    def predict(batch: slice) -> np.ndarray:
        y = backbone(backbone.input_tensor(dataset.images[batch]))
        return head.predict(y).label

    try:
        batches = sequential_batches(dataset, batch_size)
        if workers > 0 and len(batches) > 1:
            with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="dap-eval") as pool:
                labels = list(pool.map(predict, batches))
        else:
            labels = [predict(batch) for batch in batches]
    finally:
        backbone.train(was_training[0])
        head.train(was_training[1])

    result = score_predictions(np.concatenate(labels), dataset.labels, dataset.num_classes)
    logger.debug(
        f"Evaluated {result.num_samples} {dataset.split} samples: accuracy {result.accuracy:.4f}"
    )
    return result
