# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.errors import ConfigError
from src.training.metrics import METRICS_NAME, read_metrics_csv
from src.training.optimizer import OptimizerState
from src.training.trainer import build_model, dry_run_check, train, train_step


def test_every_head_kind_shares_the_backbone_init(tiny_config, tiny_data):
    train_set, _ = tiny_data
    checksums = {
        build_model(tiny_config(f"head.kind={kind}"), 3)[0].checksum()
        for kind in ("GAP", "GMP", "GAP+GMP", "DAP")
    }
    assert len(checksums) == 1


def test_dry_run_rejects_channel_mismatch(tiny_config, tiny_data):
    config = tiny_config("backbone.in_channels=3")
    backbone, head = build_model(config, 3)
    with pytest.raises(ConfigError) as exc:
        dry_run_check(config, backbone, head, tiny_data[0])
    assert exc.value.key == "backbone.in_channels"


def test_dry_run_rejects_resolution_mismatch(tiny_config, tiny_data):
    config = tiny_config("backbone.input_size=16")
    backbone, head = build_model(config, 3)
    with pytest.raises(ConfigError) as exc:
        dry_run_check(config, backbone, head, tiny_data[0])
    assert exc.value.key == "backbone.input_size"


def _head_losses(backbone, head, images, labels):
    y = backbone(backbone.input_tensor(images))
    outputs = head(y, labels)
    return outputs.loss_values(), outputs.selected


def test_small_step_on_a_frozen_batch_lowers_the_loss(tiny_config, tiny_data):
    backbone, head = build_model(tiny_config(), 3)
    images, labels = tiny_data[0].images[:8], tiny_data[0].labels[:8]
    start = (backbone.state_dict(), head.state_dict())
    losses, routed = _head_losses(backbone, head, images, labels)
    before = losses[routed]

    lr, after = 1e-4, None
    for _ in range(5):
        backbone.load_state_dict(start[0])
        head.load_state_dict(start[1])
        train_step(backbone, head, images, labels, OptimizerState(base_lr=lr), lambda_lr=0.0)
        after = _head_losses(backbone, head, images, labels)[0][routed]
        if after < before:
            break
        lr /= 2
    assert after < before


def test_step_reports_routing_and_lambdas(tiny_config, tiny_data):
    backbone, head = build_model(tiny_config(), 3)
    step = train_step(
        backbone, head, tiny_data[0].images[:8], tiny_data[0].labels[:8], OptimizerState()
    )
    assert step.routing_counts.sum() == 1
    assert step.lambdas.sum() == pytest.approx(1.0)
    assert len(step.head_losses) == head.num_heads
    assert np.isfinite(step.loss)


def test_training_writes_artifacts(tiny_config, tiny_data, tmp_path):
    run = train(tiny_config("train.checkpoint_every=1"), *tiny_data, output_dir=tmp_path)
    assert run.epochs_completed == 2
    assert (tmp_path / "resolved_config.txt").exists()
    assert (tmp_path / "checkpoints" / "epoch_0001" / "checkpoint.manifest").exists()
    assert (tmp_path / "checkpoints" / "final" / "checkpoint.manifest").exists()

    frame = read_metrics_csv(tmp_path / METRICS_NAME)
    assert frame["epoch"].tolist() == [0, 1]
    assert frame["lambda_1"].notna().all()
    histogram = [int(c) for c in frame["routed_head_histogram"][0].split(";")]
    assert len(histogram) == run.head.num_heads
    assert sum(histogram) == 3  # one routed head per batch of 8 from 18 samples
    assert len(run.lambda_trajectory) == 2


def test_training_is_deterministic(tiny_config, tiny_data, tmp_path):
    first = train(tiny_config(), *tiny_data, output_dir=tmp_path / "a")
    second = train(tiny_config(), *tiny_data, output_dir=tmp_path / "b")
    assert first.step_losses == second.step_losses
    assert (tmp_path / "a" / METRICS_NAME).read_bytes() == (
        tmp_path / "b" / METRICS_NAME
    ).read_bytes()


def test_eval_every_skips_test_accuracy(tiny_config, tiny_data):
    run = train(tiny_config("train.epochs=3", "train.eval_every=2"), *tiny_data)
    assert [m.test_acc is None for m in run.history] == [True, False, False]
    assert run.best_test_acc == max(m.test_acc for m in run.history[1:])


def test_lambda_lr_zero_freezes_lambdas(tiny_config, tiny_data):
    run = train(tiny_config("optim.lambda_lr=0.0", "train.epochs=1"), tiny_data[0])
    assert_allclose(run.head.lambdas, np.full(run.head.num_heads, 1.0 / run.head.num_heads))
