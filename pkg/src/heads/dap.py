# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Dynamic attention pooling head.

The backbone's final feature map is average-pooled over pw x pw windows with
stride s. Each of the n resulting positions gets its own bias-free softmax
classifier. Training back-propagates only the largest per-head loss; inference
fuses the head distributions with the per-head weights lambda.
"""

import logging
from typing import Optional, Sequence

import numpy as np

from src.autodiff.functions import add, log, matmul, mean, mul, pick, scale, softmax
from src.autodiff.tensor import DEFAULT_DTYPE, Tensor
from src.errors import (
    ConfigError,
    DimensionError,
    DomainError,
    NumericError,
    TargetIndexError,
)
from src.heads.types import HeadKind, HeadOutputs, Prediction, Routing
from src.nn.module import Module, kaiming_normal
from src.nn.pooling import local_avg_pool, pooled_extent

logger = logging.getLogger(__name__)

LAMBDA_FLOOR = 1e-4
PROBABILITY_FLOOR = 1e-12


class ClassifierHead(Module):
    """Shared train/predict interface of every head kind.

    Subclasses provide ``features`` (one vector per classifier) and
    ``logits`` (classifier i applied to its vector).
    """

    kind: HeadKind
    routing: Routing = Routing.PER_BATCH
    lambda_floor: float = LAMBDA_FLOOR

    @property
    def num_heads(self) -> int:
        return len(self.lambdas)

    def features(self, y: Tensor) -> list[Tensor]:
        raise NotImplementedError

    def logits(self, index: int, feature: Tensor) -> Tensor:
        raise NotImplementedError

    def forward(self, y: Tensor, targets: Optional[np.ndarray] = None) -> HeadOutputs:
        features = self.features(y)
        probs = [softmax(self.logits(i, f)) for i, f in enumerate(features)]
        outputs = HeadOutputs(features=features, probs=probs)
        if targets is None:
            return outputs

        targets = np.asarray(targets, dtype=np.int64)
        if self.routing == Routing.PER_SAMPLE:
            sample_losses = [
                head_sample_losses(p, targets, lam, self.lambda_floor)
                for p, lam in zip(probs, self.lambdas)
            ]
            outputs.losses = [mean(loss) for loss in sample_losses]
            choice, routed = route_per_sample(sample_losses)
            outputs.selected_per_sample = choice
            outputs.routed_loss = routed
        else:
            outputs.losses = [
                head_loss(p, targets, lam, self.lambda_floor)
                for p, lam in zip(probs, self.lambdas)
            ]
            outputs.selected, outputs.routed_loss = route_max_loss(outputs.losses)
        return outputs

    def predict(self, y: Tensor) -> Prediction:
        return fuse_score([p.data for p in self(y).probs], self.lambdas)

    def step_lambdas(self, losses: Sequence[float], lr: float) -> np.ndarray:
        self.lambdas[...] = update_lambdas(losses, self.lambdas, lr, self.lambda_floor)
        return self.lambdas


class DapHead(ClassifierHead):
    """n per-window softmax classifiers plus per-head weights lambda."""

    kind = HeadKind.DAP

    def __init__(
        self,
        channels: int,
        num_classes: int,
        feature_extent: int,
        window: int = 3,
        stride: int = 2,
        ceil_mode: bool = True,
        routing: Routing = Routing.PER_BATCH,
        lambda_floor: float = LAMBDA_FLOOR,
        rng: Optional[np.random.Generator] = None,
        dtype=DEFAULT_DTYPE,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.window = window
        self.stride = stride
        self.ceil_mode = ceil_mode
        self.routing = Routing(routing)
        self.num_classes = num_classes
        self.grid = (
            pooled_extent(feature_extent, window, stride, ceil_mode),
            pooled_extent(feature_extent, window, stride, ceil_mode),
        )
        n = self.grid[0] * self.grid[1]
        if n < 1:
            raise ConfigError(f"DAP pooling yields no windows on a {feature_extent} map")
        if not 0.0 < lambda_floor <= 1.0 / n:
            raise ConfigError(
                f"lambda_floor {lambda_floor} must lie in (0, 1/{n}]", key="head.lambda_floor"
            )
        self.lambda_floor = lambda_floor
        self.heads = [
            Tensor(
                kaiming_normal(rng, (channels, num_classes), channels, gain=1.0),
                requires_grad=True,
                dtype=dtype,
            )
            for _ in range(n)
        ]
        self.register_buffer("lambdas", np.full(n, 1.0 / n, dtype=np.float64))
        logger.info(
            f"DAP head: pw={window} s={stride} ceil={ceil_mode} on {feature_extent}x"
            f"{feature_extent} -> {self.grid[0]}x{self.grid[1]} = {n} classifiers"
        )

    def features(self, y: Tensor) -> list[Tensor]:
        return split_windows(y, self)

    def logits(self, index: int, feature: Tensor) -> Tensor:
        return matmul(feature, self.heads[index])


def split_windows(y: Tensor, head: DapHead) -> list[Tensor]:
    """Local-average-pool ``y`` and return one [batch x ch] vector per window."""
    pooled = local_avg_pool(y, head.window, head.stride, head.ceil_mode)
    n1, n2 = pooled.shape[2], pooled.shape[3]
    if n1 * n2 < 1:
        raise ConfigError("DAP pooling produced no windows")
    if (n1, n2) != head.grid:
        raise DimensionError(
            f"Feature map {y.shape} pools to {n1}x{n2} windows, head expects "
            f"{head.grid[0]}x{head.grid[1]}"
        )
    return [pooled[:, :, r, c] for r in range(n1) for c in range(n2)]


def head_softmax(feature: Tensor, weight: Tensor) -> Tensor:
    """P_i(y=c | f_i) for a bias-free linear classifier."""
    if feature.shape[1] != weight.shape[0]:
        raise DimensionError(
            f"Feature width {feature.shape[1]} does not match classifier {weight.shape}"
        )
    return softmax(matmul(feature, weight))


def _check_targets(probs: Tensor, targets: np.ndarray) -> None:
    num_classes = probs.shape[1]
    if targets.shape != (probs.shape[0],):
        raise DimensionError(
            f"{targets.shape[0] if targets.ndim else 0} targets for batch {probs.shape[0]}"
        )
    if np.any(targets < 0) or np.any(targets >= num_classes):
        bad = targets[(targets < 0) | (targets >= num_classes)][0]
        raise TargetIndexError(f"Target class {bad} outside [0, {num_classes})")


def head_sample_losses(
    probs: Tensor,
    targets: np.ndarray,
    weight: float,
    lambda_floor: float = LAMBDA_FLOOR,
) -> Tensor:
    """Per-sample -log(lambda_i * P_i(target)).

    P_i(target) is floored at 1e-12 before the log and then scaled by lambda_i.
    """
    if weight < lambda_floor:
        raise DomainError(f"lambda {weight} is below the floor {lambda_floor}")
    targets = np.asarray(targets, dtype=np.int64)
    _check_targets(probs, targets)
    log_prob = log(pick(probs, targets), floor=PROBABILITY_FLOOR)
    return scale(add(log_prob, float(np.log(weight))), -1.0)


def head_loss(
    probs: Tensor,
    targets: np.ndarray,
    weight: float,
    lambda_floor: float = LAMBDA_FLOOR,
) -> Tensor:
    """Batch mean of the per-sample weighted cross-entropy of one head."""
    return mean(head_sample_losses(probs, targets, weight, lambda_floor))


def route_max_loss(losses: Sequence[Tensor]) -> tuple[int, Tensor]:
    """Pick the largest head loss (lowest index on ties)."""
    if not losses:
        raise ConfigError("route_max_loss needs at least one head loss")
    values = np.array([loss.item() for loss in losses])
    if np.any(np.isnan(values)):
        raise NumericError(f"NaN head loss in {values.tolist()}")
    index = int(np.argmax(values))
    return index, losses[index]


def route_per_sample(sample_losses: Sequence[Tensor]) -> tuple[np.ndarray, Tensor]:
    """Route each sample to its own max-loss head; return the batch mean."""
    matrix = np.stack([loss.data for loss in sample_losses], axis=1)
    if np.any(np.isnan(matrix)):
        raise NumericError("NaN per-sample head loss")
    choice = matrix.argmax(axis=1)
    batch = matrix.shape[0]
    routed = None
    for i, loss in enumerate(sample_losses):
        mask = choice == i
        if not mask.any():
            continue
        term = scale(mul(loss, Tensor(mask.astype(loss.dtype))).sum(), 1.0 / batch)
        routed = term if routed is None else add(routed, term)
    return choice, routed


def project_lambdas(values: np.ndarray, lambda_floor: float = LAMBDA_FLOOR) -> np.ndarray:
    """Clamp to the floor and rescale the excess so the weights sum to 1."""
    values = np.asarray(values, dtype=np.float64)
    n = values.size
    if n == 1:
        return np.ones(1)
    if n * lambda_floor > 1.0:
        raise ConfigError(f"lambda_floor {lambda_floor} is infeasible for {n} heads")
    excess = np.maximum(values - lambda_floor, 0.0)
    total = excess.sum()
    if not np.isfinite(total) or total <= 0.0:
        return np.full(n, 1.0 / n)
    return lambda_floor + excess * ((1.0 - n * lambda_floor) / total)


def update_lambdas(
    losses: Sequence[float],
    lambdas: np.ndarray,
    lr: float,
    lambda_floor: float = LAMBDA_FLOOR,
) -> np.ndarray:
    """One descent step on every lambda_i followed by the simplex projection.

    d loss_i / d lambda_i = -1 / lambda_i for every head, independent of the
    routing decision.
    """
    lambdas = np.asarray(lambdas, dtype=np.float64)
    if len(losses) != lambdas.size:
        raise DimensionError(f"{len(losses)} losses for {lambdas.size} lambda weights")
    delta = -1.0 / lambdas
    return project_lambdas(lambdas - lr * delta, lambda_floor)


def fuse_score(probs: Sequence[np.ndarray], lambdas: np.ndarray) -> Prediction:
    """score = sum_i lambda_i * P_i, label = argmax (lowest class on ties)."""
    if len(probs) != len(lambdas):
        raise DimensionError(f"{len(probs)} distributions for {len(lambdas)} weights")
    score = np.zeros_like(np.asarray(probs[0], dtype=np.float64))
    for weight, p in zip(lambdas, probs):
        score = score + weight * np.asarray(p, dtype=np.float64)
    return Prediction(score=score, label=score.argmax(axis=1))
