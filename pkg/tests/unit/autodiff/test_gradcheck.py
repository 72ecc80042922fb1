# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import numpy as np
import pytest

from src.autodiff import functions as F
from src.autodiff.gradcheck import (
    check_gradients,
    check_parameter_gradients,
    relative_error,
)
from src.autodiff.tensor import Tensor
from src.verify.suite import op_gradcheck_cases


@pytest.fixture
def rng():
    return np.random.default_rng(11)


def test_matmul_gradients_match_finite_differences(rng):
    result = check_gradients(
        F.matmul, [rng.standard_normal((3, 4)), rng.standard_normal((4, 2))], name="matmul"
    )
    assert result.passed
    assert result.max_rel_error <= 1e-6


def test_mul_gradients_match_finite_differences(rng):
    result = check_gradients(
        F.mul, [rng.standard_normal((2, 3)), rng.standard_normal((2, 3))], name="mul"
    )
    assert result.max_rel_error <= 1e-6


@pytest.mark.parametrize("trial", range(20))
def test_softmax_log_chain_on_random_inputs(trial):
    rng = np.random.default_rng(trial)
    result = check_gradients(
        lambda x: F.log(F.softmax(x), floor=1e-12), [rng.standard_normal((2, 4))]
    )
    assert result.passed, result.describe()


def test_wrong_backward_rule_is_detected(rng):
    class BrokenScale(F.Function):
        name = "broken_scale"

        @staticmethod
        def forward(ctx, a):
            return 2.0 * a

        @staticmethod
        def backward(ctx, grad):
            return (-2.0 * grad,)

    result = check_gradients(BrokenScale.apply, [rng.standard_normal(5)], name="broken")
    assert not result.passed
    assert "broken" in result.describe()
    assert "FAILED" in result.describe()


def test_parameter_gradients_are_restored_after_check(rng):
    w = Tensor(rng.standard_normal((3, 2)), requires_grad=True)
    x = Tensor(rng.standard_normal((4, 3)))
    before = w.data.copy()

    def loss():
        return F.sum(F.exp(F.scale(F.matmul(x, w), 0.3)))

    results = check_parameter_gradients(loss, {"w": w})
    assert results["w"].passed
    np.testing.assert_array_equal(w.data, before)


def test_relative_error_formula():
    assert float(relative_error(np.array(1.0), np.array(1.0))) == 0.0
    assert float(relative_error(np.array(2.0), np.array(1.0))) == pytest.approx(1.0, rel=1e-6)


@pytest.mark.parametrize("op", sorted(op_gradcheck_cases(np.random.default_rng(0))))
def test_every_op_on_twenty_random_inputs(op):
    for trial in range(20):
        fn, arrays = op_gradcheck_cases(np.random.default_rng([trial, 7]))[op]
        result = check_gradients(fn, arrays, name=op)
        assert result.passed, f"trial {trial}: {result.describe()}"
