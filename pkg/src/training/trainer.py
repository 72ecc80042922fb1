# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
SGD training of a backbone + classification head.

One step is: forward, per-head losses, routing, backward of the routed loss,
SGD on every parameter, then the lambda update from all head losses.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Union

import numpy as np

from src.autodiff.tensor import Tape
from src.config.configuration import RunConfig
from src.datasets.batching import BatchPlan, iterate_batches
from src.datasets.image_set import LabeledImageSet
from src.errors import ConfigError, DapPoolError, DimensionError
from src.heads.builder import build_head
from src.heads.dap import ClassifierHead, fuse_score
from src.logging.run_logger import RunLogger, get_run_logger
from src.nn.backbone import Backbone, build_backbone
from src.training.checkpoint import save_checkpoint
from src.training.evaluation import evaluate
from src.training.metrics import METRICS_NAME, EpochMetrics, write_metrics_csv
from src.training.optimizer import OptimizerState, sgd_step

logger = logging.getLogger(__name__)


@dataclass
class StepResult:
    loss: float
    head_losses: list[float]
    routing_counts: np.ndarray
    correct: int
    grads: dict[str, np.ndarray]
    lambdas: np.ndarray


@dataclass
class TrainRun:
    backbone: Backbone
    head: ClassifierHead
    optimizer: OptimizerState
    config: RunConfig
    init_checksum: str
    history: list[EpochMetrics] = field(default_factory=list)
    step_losses: list[float] = field(default_factory=list)
    lambda_trajectory: list[np.ndarray] = field(default_factory=list)
    output_dir: Optional[Path] = None

    @property
    def epochs_completed(self) -> int:
        return len(self.history)

    @property
    def final_test_acc(self) -> Optional[float]:
        return self.history[-1].test_acc if self.history else None

    @property
    def best_test_acc(self) -> Optional[float]:
        scores = [m.test_acc for m in self.history if m.test_acc is not None]
        return max(scores) if scores else None


def build_model(
    config: RunConfig, num_classes: int
) -> tuple[Backbone, ClassifierHead]:
    """Backbone and head with independent seeded streams, so every head kind
    sees the same backbone initialization for a given seed."""
    seed = config.train.seed
    backbone = build_backbone(config.backbone, rng=np.random.default_rng([seed, 0]))
    head = build_head(
        config.head.kind,
        backbone.out_channels,
        num_classes,
        backbone.output_extent,
        config=config.head,
        rng=np.random.default_rng([seed, 1]),
        dtype=backbone.dtype,
    )
    return backbone, head


def dry_run_check(
    config: RunConfig,
    backbone: Backbone,
    head: ClassifierHead,
    dataset: LabeledImageSet,
) -> None:
    """Push one sample through the model in eval mode before training starts."""
    channels, extent = dataset.channels, dataset.resolution
    if channels != config.backbone.in_channels:
        raise config.config_error(
            "backbone.in_channels",
            f"is {config.backbone.in_channels} but the dataset has {channels} channels",
        )
    if extent != config.backbone.input_size or dataset.images.shape[3] != extent:
        raise config.config_error(
            "backbone.input_size",
            f"is {config.backbone.input_size} but dataset images are "
            f"{dataset.images.shape[2]}x{dataset.images.shape[3]}",
        )
    modes = backbone.training, head.training
    backbone.eval()
    head.eval()
    try:
        y = backbone(backbone.input_tensor(dataset.images[:1]))
        outputs = head(y, dataset.labels[:1])
    except (DimensionError, ConfigError) as e:
        raise ConfigError(f"model does not fit the data: {e}") from e
    finally:
        backbone.train(modes[0])
        head.train(modes[1])
    if outputs.probs[0].shape[1] != dataset.num_classes:
        raise ConfigError(
            f"head predicts {outputs.probs[0].shape[1]} classes, dataset has "
            f"{dataset.num_classes}"
        )


def named_parameters(backbone: Backbone, head: ClassifierHead) -> dict:
    params = backbone.named_parameters(prefix="backbone.")
    params.update(head.named_parameters(prefix="head."))
    return params


def train_step(
    backbone: Backbone,
    head: ClassifierHead,
    images: np.ndarray,
    targets: np.ndarray,
    optimizer: OptimizerState,
    lambda_lr: Optional[float] = None,
) -> StepResult:
    params = named_parameters(backbone, head)
    with Tape() as tape:
        tape.watch(*params.values())
        y = backbone(backbone.input_tensor(images))
        outputs = head(y, targets)
        gradient_set = tape.backward(outputs.routed_loss)
    grads = {name: gradient_set[p] for name, p in params.items()}

    # Accuracy uses the weights the forward pass saw.
    prediction = fuse_score([p.data for p in outputs.probs], head.lambdas)
    correct = int(np.sum(prediction.label == targets))

    head_losses = outputs.loss_values()
    sgd_step(params, grads, optimizer)
    head.step_lambdas(head_losses, optimizer.lr if lambda_lr is None else lambda_lr)
    return StepResult(
        loss=outputs.routed_loss.item(),
        head_losses=head_losses,
        routing_counts=outputs.routing_counts(),
        correct=correct,
        grads=grads,
        lambdas=head.lambdas.copy(),
    )


def train(
    config: RunConfig,
    train_set: LabeledImageSet,
    test_set: Optional[LabeledImageSet] = None,
    output_dir: Optional[Union[str, Path]] = None,
    run_logger: Optional[RunLogger] = None,
) -> TrainRun:
    """Train for ``config.train.epochs`` epochs; artifacts go to ``output_dir`` if given."""
    run_logger = run_logger or get_run_logger()
    backbone, head = build_model(config, train_set.num_classes)
    dry_run_check(config, backbone, head, train_set)

    optimizer = OptimizerState.from_config(config.optim)
    run = TrainRun(
        backbone=backbone,
        head=head,
        optimizer=optimizer,
        config=config,
        init_checksum=backbone.checksum(),
        output_dir=Path(output_dir) if output_dir is not None else None,
    )
    if run.output_dir is not None:
        config.write_resolved(run.output_dir)

    plan = BatchPlan(seed=config.train.seed, batch_size=config.train.batch_size)
    epochs = config.train.epochs
    run_logger.log_run_event(
        "train",
        "started",
        metadata={
            "head": head.kind.value,
            "num_heads": head.num_heads,
            "config_hash": config.config_hash(),
            "init_checksum": run.init_checksum,
            "train_samples": len(train_set),
        },
    )
    try:
        for epoch in range(epochs):
            with run_logger.timing("epoch", epoch=epoch):
                metrics = _run_epoch(run, train_set, test_set, plan, epoch)
            run.history.append(metrics)
            run.lambda_trajectory.append(head.lambdas.copy())
            run_logger.log_epoch(
                metrics.epoch,
                metrics.lr,
                metrics.train_loss,
                metrics.train_acc,
                metrics.test_acc,
                metrics.routing_counts,
                metrics.lambdas,
            )
            if run.output_dir is not None:
                write_metrics_csv(run.history, run.output_dir / METRICS_NAME)
                every = config.train.checkpoint_every
                if every and (epoch + 1) % every == 0:
                    _checkpoint(run, run.output_dir / "checkpoints" / f"epoch_{epoch + 1:04d}")
        if run.output_dir is not None:
            _checkpoint(run, run.output_dir / "checkpoints" / "final")
    except DapPoolError as e:
        run_logger.log_run_event("train", "error", error=str(e))
        raise
    run_logger.log_run_event(
        "train",
        "completed",
        metadata={"epochs": epochs, "final_test_acc": run.final_test_acc},
    )
    return run


def _run_epoch(
    run: TrainRun,
    train_set: LabeledImageSet,
    test_set: Optional[LabeledImageSet],
    plan: BatchPlan,
    epoch: int,
) -> EpochMetrics:
    config = run.config
    lr = run.optimizer.set_epoch(epoch)
    lambda_lr = config.optim.lambda_lr
    run.backbone.train()
    run.head.train()

    loss_sum, correct, seen = 0.0, 0, 0
    routing = np.zeros(run.head.num_heads, dtype=np.int64)
    for images, labels in iterate_batches(train_set, plan, epoch, config.train.workers):
        step = train_step(run.backbone, run.head, images, labels, run.optimizer, lambda_lr)
        run.step_losses.append(step.loss)
        loss_sum += step.loss * labels.size
        correct += step.correct
        seen += labels.size
        routing += step.routing_counts
        logger.debug(f"epoch {epoch} step {len(run.step_losses)} loss {step.loss:.6f}")

    test_acc = None
    if test_set is not None and (
        (epoch + 1) % config.train.eval_every == 0 or epoch + 1 == config.train.epochs
    ):
        test_acc = evaluate(
            run.backbone, run.head, test_set, config.train.batch_size, config.train.workers
        ).accuracy
    return EpochMetrics(
        epoch=epoch,
        lr=lr,
        train_loss=loss_sum / seen,
        train_acc=correct / seen,
        test_acc=test_acc,
        routing_counts=routing.tolist(),
        lambdas=run.head.lambdas.tolist(),
    )


def _checkpoint(run: TrainRun, directory: Path) -> None:
    save_checkpoint(
        directory,
        run.backbone,
        run.head,
        run.optimizer,
        epoch=run.epochs_completed,
        seed=run.config.train.seed,
        config_hash=run.config.config_hash(),
        resolved_config=run.config.resolved_text(),
    )
