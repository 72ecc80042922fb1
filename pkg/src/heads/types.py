# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

import numpy as np

from src.autodiff.tensor import Tensor


class HeadKind(str, Enum):
    GAP = "GAP"
    GMP = "GMP"
    GAP_GMP = "GAP+GMP"
    DAP = "DAP"


class Routing(str, Enum):
    PER_BATCH = "per_batch"
    PER_SAMPLE = "per_sample"


@dataclass
class HeadOutputs:
    """Everything one head forward pass produces."""

    features: list[Tensor]
    probs: list[Tensor]
    losses: list[Tensor] = field(default_factory=list)
    selected: Optional[int] = None
    selected_per_sample: Optional[np.ndarray] = None
    routed_loss: Optional[Tensor] = None

    @property
    def num_heads(self) -> int:
        return len(self.probs)

    def loss_values(self) -> list[float]:
        return [loss.item() for loss in self.losses]

    def routing_counts(self) -> np.ndarray:
        """Histogram of routed heads for this step."""
        counts = np.zeros(self.num_heads, dtype=np.int64)
        if self.selected_per_sample is not None:
            np.add.at(counts, self.selected_per_sample, 1)
        elif self.selected is not None:
            counts[self.selected] += 1
        return counts


@dataclass
class Prediction:
    """Fused class distribution and its argmax label per sample."""

    score: np.ndarray
    label: np.ndarray
