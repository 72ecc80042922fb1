# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import numpy as np
import pytest
from numpy.testing import assert_allclose

from src.autodiff.tensor import Tensor
from src.errors import NumericError
from src.training.optimizer import OptimizerState, lr_at, sgd_step


@pytest.mark.parametrize("epoch, expected", [(0, 0.1), (99, 0.1), (100, 0.01), (400, 1e-5)])
def test_step_decay_schedule(epoch, expected):
    state = OptimizerState(base_lr=0.1, factor=10.0, interval=100)
    assert lr_at(epoch, state) == pytest.approx(expected, rel=1e-12)


def test_negative_epoch():
    with pytest.raises(ValueError):
        lr_at(-1, OptimizerState())


def test_set_epoch_updates_lr():
    state = OptimizerState(base_lr=0.1, factor=10.0, interval=2)
    assert state.lr == 0.1
    assert state.set_epoch(2) == pytest.approx(0.01)
    assert state.lr == pytest.approx(0.01)


def test_plain_sgd_update():
    param = Tensor([1.0])
    sgd_step({"p": param}, {"p": np.array([2.0])}, OptimizerState(base_lr=0.1))
    assert_allclose(param.data, [0.8])


def test_zero_gradient_leaves_parameters():
    param = Tensor([[1.0, -2.0]])
    sgd_step({"p": param}, {"p": np.zeros((1, 2))}, OptimizerState(base_lr=0.5))
    assert_allclose(param.data, [[1.0, -2.0]])


def test_momentum_accumulates():
    param = Tensor([0.0])
    state = OptimizerState(base_lr=1.0, momentum=0.9)
    grads = {"p": np.array([1.0])}
    sgd_step({"p": param}, grads, state)
    first = -param.data.copy()
    sgd_step({"p": param}, grads, state)
    second = -param.data - first
    assert_allclose(second, 1.9 * first)


def test_weight_decay_pulls_towards_zero():
    param = Tensor([2.0])
    sgd_step({"p": param}, {"p": np.array([0.0])}, OptimizerState(base_lr=0.1, weight_decay=0.5))
    assert_allclose(param.data, [1.9])


def test_nan_gradient_names_the_parameter_and_moves_nothing():
    a, b = Tensor([1.0]), Tensor([1.0])
    grads = {"a": np.array([1.0]), "b": np.array([np.nan])}
    with pytest.raises(NumericError) as exc:
        sgd_step({"a": a, "b": b}, grads, OptimizerState())
    assert exc.value.parameter == "b"
    assert a.data[0] == 1.0


def test_inf_gradient():
    with pytest.raises(NumericError, match="Inf"):
        sgd_step({"w": Tensor([1.0])}, {"w": np.array([np.inf])}, OptimizerState())
