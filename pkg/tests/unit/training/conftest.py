# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import pytest

from src.config.configuration import RunConfig
from src.datasets.image_set import compute_channel_stats, with_stats
from src.datasets.synthetic import make_synthetic

TINY_CONFIG = """
backbone.in_channels=1
backbone.input_size=8
backbone.widths=[2, 3]
head.kind=DAP
head.pw=2
head.stride=1
optim.base_lr=0.05
optim.interval=100
train.epochs=2
train.batch_size=8
train.seed=0
"""


@pytest.fixture
def tiny_config():
    def make(*overrides):
        return RunConfig.from_text(TINY_CONFIG, overrides)

    return make


@pytest.fixture(scope="module")
def tiny_data():
    train = make_synthetic(num_classes=3, samples_per_class=6, resolution=8, seed=1)
    test = make_synthetic(num_classes=3, samples_per_class=3, resolution=8, seed=1, split="test")
    mean, std = compute_channel_stats(train.images)
    return with_stats(train, mean, std), with_stats(test, mean, std)
