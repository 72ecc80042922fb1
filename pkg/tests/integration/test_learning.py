# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Short training runs that every head kind must learn from.

A broken gradient path in a head or the backbone shows up here as a run
that never leaves chance accuracy.
"""

import pytest

from src.config.configuration import RunConfig
from src.datasets.image_set import compute_channel_stats, with_stats
from src.datasets.synthetic import make_synthetic
from src.heads.types import HeadKind
from src.training.evaluation import evaluate
from src.training.trainer import train

# 16x16 inputs through three stages give a 4x4 map; pw=3, s=2 -> 4 DAP classifiers.
SMALL_CONFIG = """
backbone.in_channels=1
backbone.input_size=16
backbone.widths=[4, 8, 16]
head.pw=3
head.stride=2
optim.base_lr=0.05
optim.momentum=0.9
optim.interval=1000
train.batch_size=16
train.seed=0
"""

ALL_HEADS = [kind.value for kind in HeadKind]


@pytest.fixture(autouse=True)
def quiet_logs(monkeypatch, tmp_path):
    monkeypatch.setenv("DAP_LOG_TO_FILES", "false")
    monkeypatch.setenv("DAP_OUTPUT_ROOT", str(tmp_path / "runs"))


def standardized(train_set, test_set=None):
    mean, std = compute_channel_stats(train_set.images)
    train_set = with_stats(train_set, mean, std)
    return train_set, (with_stats(test_set, mean, std) if test_set is not None else None)


def small_config(*overrides: str) -> RunConfig:
    return RunConfig.from_text(SMALL_CONFIG, list(overrides))


class TestTrainAccuracy:
    """Train-set accuracy targets for short runs on two-class gratings."""

    @pytest.mark.parametrize("kind", ALL_HEADS)
    def test_noise_free_set_is_fit_within_200_steps(self, kind):
        train_set, _ = standardized(
            make_synthetic(num_classes=2, samples_per_class=32, noise=0.0, seed=0)
        )
        # 64 samples / batch 16 = 4 steps per epoch.
        run = train(small_config(f"head.kind={kind}", "train.epochs=50"), train_set)
        assert len(run.step_losses) == 200
        assert max(m.train_acc for m in run.history) == 1.0

    @pytest.mark.parametrize("kind", ALL_HEADS)
    def test_noisy_set_reaches_99_percent_within_300_steps(self, kind):
        train_set, _ = standardized(
            make_synthetic(num_classes=2, samples_per_class=32, noise=0.1, seed=1)
        )
        run = train(small_config(f"head.kind={kind}", "train.epochs=75"), train_set)
        assert len(run.step_losses) == 300
        assert max(m.train_acc for m in run.history) >= 0.99
        assert run.step_losses[-1] < run.step_losses[0]


def test_memorized_set_evaluates_perfectly():
    train_set, _ = standardized(
        make_synthetic(num_classes=2, samples_per_class=5, noise=0.1, seed=2)
    )
    run = train(
        small_config("head.kind=DAP", "train.batch_size=10", "train.epochs=150"), train_set
    )
    result = evaluate(run.backbone, run.head, train_set)
    assert result.num_samples == 10
    assert result.accuracy == 1.0


@pytest.mark.slow
def test_four_class_gratings_dap_keeps_up_with_gap():
    """Both heads reach 95% test accuracy in 30 epochs; DAP stays within
    2 points of GAP on average over three seeds."""
    scores = {HeadKind.DAP.value: [], HeadKind.GAP.value: []}
    for seed in range(3):
        train_set, test_set = standardized(
            make_synthetic(num_classes=4, samples_per_class=100, seed=seed),
            make_synthetic(num_classes=4, samples_per_class=50, seed=seed, split="test"),
        )
        for kind in scores:
            run = train(
                small_config(
                    f"head.kind={kind}",
                    f"train.seed={seed}",
                    "backbone.widths=[8, 16, 32]",
                    "train.batch_size=32",
                    "train.epochs=30",
                    "train.eval_every=30",
                ),
                train_set,
                test_set,
            )
            assert run.final_test_acc >= 0.95, f"{kind} seed {seed}: {run.final_test_acc}"
            scores[kind].append(run.final_test_acc)

    dap = sum(scores[HeadKind.DAP.value]) / 3
    gap = sum(scores[HeadKind.GAP.value]) / 3
    assert dap >= gap - 0.02
