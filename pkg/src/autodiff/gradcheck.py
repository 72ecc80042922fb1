# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Central finite-difference gradient checking.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from src.autodiff.tensor import Tape, Tensor

logger = logging.getLogger(__name__)

DEFAULT_STEP = 1e-5
DEFAULT_TOLERANCE = 1e-4
# Elements that fail are re-measured once with this step; a finite
# difference that straddles a relu kink rarely does so at both steps.
RETRY_STEP = 1e-7


@dataclass
class GradCheckResult:
    """Outcome of comparing analytic and numerical gradients."""

    name: str
    max_rel_error: float
    worst_input: int
    worst_index: tuple[int, ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_error <= self.tolerance

    def describe(self) -> str:
        status = "ok" if self.passed else "FAILED"
        return (
            f"gradcheck[{self.name}] {status}: max rel. error {self.max_rel_error:.3e} "
            f"(input {self.worst_input}, index {self.worst_index}, tol {self.tolerance:.0e})"
        )


def relative_error(analytic: np.ndarray, numeric: np.ndarray) -> np.ndarray:
    return np.abs(analytic - numeric) / (np.abs(numeric) + 1e-8)


def _element_error(
    value: float,
    numeric_at: Callable[[float], float],
    step: float,
    retry_step: Optional[float],
    tolerance: float,
    atol: float,
) -> float:
    error = 0.0
    for h in (step, retry_step):
        if h is None:
            break
        numeric = numeric_at(h)
        if abs(value - numeric) <= atol:
            return 0.0
        current = float(relative_error(np.asarray(value), np.asarray(numeric)))
        error = current if h == step else min(error, current)
        if error <= tolerance:
            break
    return error


def _central_in_place(
    loss_fn: Callable[[], Tensor], param: Tensor, index: tuple, h: float
) -> float:
    original = param.data[index]
    param.data[index] = original + h
    up = loss_fn().item()
    param.data[index] = original - h
    down = loss_fn().item()
    param.data[index] = original
    return (up - down) / (2 * h)


def check_gradients(
    fn: Callable[..., Tensor],
    arrays: Sequence[np.ndarray],
    name: str = "fn",
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    atol: float = 1e-9,
    rng: Optional[np.random.Generator] = None,
    retry_step: Optional[float] = RETRY_STEP,
) -> GradCheckResult:
    """Compare the tape's vector-Jacobian product with central differences.

    Args:
        fn: Maps input tensors to an output tensor of any shape
        arrays: Inputs; each one is differentiated
        name: Label used in the result (normally the op name)
        step: Finite-difference step
        tolerance: Maximum accepted relative error
        atol: Absolute differences below this are treated as exact
        rng: Source of the random cotangent for non-scalar outputs
        retry_step: Second step for elements that fail at ``step`` (None disables)

    Returns:
        GradCheckResult naming the worst offending element
    """
    rng = rng or np.random.default_rng(0)
    arrays = [np.array(a, dtype=np.float64) for a in arrays]
    leaves = [Tensor(a, requires_grad=True) for a in arrays]

    with Tape() as tape:
        tape.watch(*leaves)
        output = fn(*leaves)
    cotangent = (
        np.ones_like(output.data) if output.size == 1 else rng.standard_normal(output.shape)
    )
    grads = tape.vjp(output, cotangent)
    analytic = [grads[leaf].copy() for leaf in leaves]

    def projected(values: list[np.ndarray]) -> float:
        out = fn(*(Tensor(v) for v in values))
        return float(np.sum(out.data * cotangent))

    def central(which: int, index: tuple, h: float) -> float:
        plus = [a.copy() for a in arrays]
        minus = [a.copy() for a in arrays]
        plus[which][index] += h
        minus[which][index] -= h
        return (projected(plus) - projected(minus)) / (2 * h)

    worst = (0.0, 0, ())
    for which, base in enumerate(arrays):
        for index in np.ndindex(base.shape):
            value = analytic[which][index]
            error = _element_error(
                value, lambda h: central(which, index, h), step, retry_step, tolerance, atol
            )
            if error > worst[0]:
                worst = (error, which, index)

    result = GradCheckResult(
        name=name,
        max_rel_error=worst[0],
        worst_input=worst[1],
        worst_index=tuple(int(i) for i in worst[2]),
        tolerance=tolerance,
    )
    logger.debug(result.describe())
    return result


def check_parameter_gradients(
    loss_fn: Callable[[], Tensor],
    parameters: dict[str, Tensor],
    step: float = DEFAULT_STEP,
    tolerance: float = DEFAULT_TOLERANCE,
    atol: float = 1e-9,
    retry_step: Optional[float] = RETRY_STEP,
) -> dict[str, GradCheckResult]:
    """Gradient-check a scalar loss against parameters it closes over.

    Parameters are perturbed in place and restored afterwards.
    """
    with Tape() as tape:
        tape.watch(*parameters.values())
        loss = loss_fn()
    grads = tape.backward(loss)
    analytic = {name: grads[p].copy() for name, p in parameters.items()}

    results = {}
    for name, param in parameters.items():
        worst = (0.0, ())
        for index in np.ndindex(param.shape):
            value = analytic[name][index]
            error = _element_error(
                value,
                lambda h: _central_in_place(loss_fn, param, index, h),
                step,
                retry_step,
                tolerance,
                atol,
            )
            if error > worst[0]:
                worst = (error, index)
        results[name] = GradCheckResult(
            name=name,
            max_rel_error=worst[0],
            worst_input=0,
            worst_index=tuple(int(i) for i in worst[1]),
            tolerance=tolerance,
        )
    return results
