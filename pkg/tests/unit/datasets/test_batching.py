# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import numpy as np
import pytest
from numpy.testing import assert_array_equal

from src.datasets.batching import BatchPlan, iterate_batches, sequential_batches
from src.datasets.image_set import LabeledImageSet


def make_set(size: int) -> LabeledImageSet:
    images = np.arange(size, dtype=np.float64).reshape(size, 1, 1, 1)
    return LabeledImageSet(images=images, labels=np.arange(size) % 2, num_classes=2)


def test_final_short_batch_is_kept():
    batches = list(iterate_batches(make_set(10), BatchPlan(seed=0, batch_size=4), epoch=0))
    assert [len(labels) for _, labels in batches] == [4, 4, 2]


def test_epoch_is_a_permutation_of_the_dataset():
    dataset = make_set(50)
    batches = list(iterate_batches(dataset, BatchPlan(seed=1, batch_size=8), epoch=2))
    seen = np.concatenate([images.ravel() for images, _ in batches])
    assert sorted(seen.tolist()) == list(range(50))


def test_epochs_are_shuffled_differently():
    plan = BatchPlan(seed=0, batch_size=8)
    assert not np.array_equal(plan.permutation(0, 32), plan.permutation(1, 32))


def test_same_seed_and_epoch_repeat():
    a = BatchPlan(seed=5, batch_size=8).permutation(3, 100)
    b = BatchPlan(seed=5, batch_size=8).permutation(3, 100)
    assert_array_equal(a, b)


@pytest.mark.parametrize("workers", [1, 3])
def test_workers_keep_the_order(workers):
    dataset = make_set(37)
    plan = BatchPlan(seed=2, batch_size=5)
    serial = list(iterate_batches(dataset, plan, epoch=1))
    threaded = list(iterate_batches(dataset, plan, epoch=1, workers=workers))
    assert len(serial) == len(threaded) == plan.num_batches(37)
    for (xs, ys), (xt, yt) in zip(serial, threaded):
        assert_array_equal(xs, xt)
        assert_array_equal(ys, yt)


def test_batch_size_must_be_positive():
    with pytest.raises(ValueError):
        BatchPlan(seed=0, batch_size=0)


def test_sequential_batches_cover_in_order():
    assert sequential_batches(make_set(5), 2) == [slice(0, 2), slice(2, 4), slice(4, 5)]
