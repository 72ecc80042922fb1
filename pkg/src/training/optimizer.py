# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import logging
from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from src.autodiff.tensor import Tensor
from src.errors import NumericError

logger = logging.getLogger(__name__)


@dataclass
class OptimizerState:
    """Step-decay SGD state: lr = base_lr / factor ** (epoch // interval)."""

    base_lr: float = 0.1
    factor: float = 10.0
    interval: int = 10
    momentum: float = 0.0
    weight_decay: float = 0.0
    lr: Optional[float] = None
    velocity: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        if self.lr is None:
            self.lr = self.base_lr

    @classmethod
    def from_config(cls, config) -> "OptimizerState":
        return cls(
            base_lr=config.base_lr,
            factor=config.factor,
            interval=config.interval,
            momentum=config.momentum,
            weight_decay=config.weight_decay,
        )

    def set_epoch(self, epoch: int) -> float:
        self.lr = lr_at(epoch, self)
        return self.lr


def lr_at(epoch: int, state: OptimizerState) -> float:
    """Piecewise-constant learning rate for ``epoch`` (0-based)."""
    if epoch < 0:
        raise ValueError(f"epoch must be non-negative, got {epoch}")
    return state.base_lr / state.factor ** (epoch // state.interval)


def sgd_step(
    params: Mapping[str, Tensor],
    grads: Mapping[str, np.ndarray],
    state: OptimizerState,
) -> None:
    """Update ``params`` in place from ``grads`` (same names).

    With momentum mu the update is ``v = mu * v + g; p -= lr * v``. Every
    gradient is checked before any parameter moves, so a NaN leaves the
    model untouched.
    """
    for name, grad in grads.items():
        if not np.all(np.isfinite(grad)):
            bad = "NaN" if np.any(np.isnan(grad)) else "Inf"
            raise NumericError(f"{bad} in gradient of {name}", parameter=name)

    lr = state.lr
    for name, param in params.items():
        grad = grads.get(name)
        if grad is None:
            continue
        if state.weight_decay:
            grad = grad + state.weight_decay * param.data
        if state.momentum:
            velocity = state.velocity.get(name)
            velocity = grad.copy() if velocity is None else state.momentum * velocity + grad
            state.velocity[name] = velocity
            grad = velocity
        param.data -= lr * grad
