# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from src.datasets.image_set import LabeledImageSet

logger = logging.getLogger(__name__)

Batch = tuple[np.ndarray, np.ndarray]


@dataclass(frozen=True)
class BatchPlan:
    """Shuffled mini-batch order; epoch ``e`` draws from ``default_rng([seed, e])``."""

    seed: int
    batch_size: int

    def __post_init__(self):
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")

    def permutation(self, epoch: int, size: int) -> np.ndarray:
        return np.random.default_rng([self.seed, epoch]).permutation(size)

    def slices(self, epoch: int, size: int) -> list[np.ndarray]:
        order = self.permutation(epoch, size)
        return [order[i : i + self.batch_size] for i in range(0, size, self.batch_size)]

    def num_batches(self, size: int) -> int:
        return -(-size // self.batch_size)


def _materialize(dataset: LabeledImageSet, indices: np.ndarray) -> Batch:
    return dataset.images[indices], dataset.labels[indices]


def iterate_batches(
    dataset: LabeledImageSet, plan: BatchPlan, epoch: int, workers: int = 0
) -> Iterator[Batch]:
    """Yield ``(images, labels)`` batches for one epoch, final short batch included.

    With ``workers > 0`` batches are gathered on a thread pool up to
    ``2 * workers`` ahead of the consumer; the yielded order is the same.
    """
    slices = plan.slices(epoch, len(dataset))
    if workers <= 0:
        for indices in slices:
            yield _materialize(dataset, indices)
        return

    ahead = 2 * workers
    with ThreadPoolExecutor(max_workers=workers, thread_name_prefix="dap-batch") as pool:
        pending: deque = deque()
        queue = iter(slices)
        for indices in queue:
            pending.append(pool.submit(_materialize, dataset, indices))
            if len(pending) >= ahead:
                break
        while pending:
            batch = pending.popleft().result()
            next_indices = next(queue, None)
            if next_indices is not None:
                pending.append(pool.submit(_materialize, dataset, next_indices))
            yield batch


def sequential_batches(dataset: LabeledImageSet, batch_size: int) -> list[slice]:
    """Unshuffled contiguous slices, used for evaluation."""
    size = len(dataset)
    return [slice(i, min(i + batch_size, size)) for i in range(0, size, batch_size)]
