# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import numpy as np
import pytest

from src.autodiff.functions import Relu
from src.verify.suite import (
    CHECKS,
    GRADCHECK_BACKBONE,
    GRADCHECK_TRIALS,
    CheckResult,
    SuiteContext,
    SuiteReport,
    _model_gradcheck,
    check_op_gradients,
    run_suite,
)


def test_fast_groups_pass():
    report = run_suite(["geometry", "schedule", "oracles", "routing"])
    assert report.passed, report.describe()
    names = [r.name for r in report.results]
    assert "lr-schedule" in names


def test_every_group_is_registered():
    assert set(CHECKS) == {
        "gradcheck", "oracles", "routing", "lambda",
        "equivalence", "determinism", "geometry", "schedule",
    }


def test_unknown_group():
    with pytest.raises(ValueError, match="unknown check groups"):
        run_suite(["nope"])


def test_flipped_relu_gradient_is_named(monkeypatch):
    def flipped(ctx, grad):
        (mask,) = ctx.saved
        return (np.where(mask, -grad, 0.0),)

    monkeypatch.setattr(Relu, "backward", staticmethod(flipped))
    report = run_suite(["gradcheck"])
    failed = {r.name for r in report.failures()}
    assert "gradcheck[relu]" in failed
    assert "gradcheck[matmul]" not in failed
    assert not report.passed


def test_report_summary_line():
    report = SuiteReport(
        results=[CheckResult("a", True, "ok"), CheckResult("b", False, "off by 2")]
    )
    text = report.describe()
    assert "[FAIL] b: off by 2" in text
    assert text.endswith("1/2 checks passed")


def test_every_op_is_checked_on_each_trial():
    results = check_op_gradients(SuiteContext(), trials=3)
    per_op = [r for r in results if r.name.startswith("gradcheck[") and "model" not in r.name]
    assert per_op
    for result in per_op:
        assert result.passed, result.describe()
        assert result.detail.startswith("3 trials")
    assert GRADCHECK_TRIALS == 20


def test_model_gradcheck_single_sample_two_classes():
    passed, detail = _model_gradcheck(SuiteContext(), GRADCHECK_BACKBONE, num_classes=2, batch=1)
    assert passed, detail
    assert detail.startswith("batch 1, 2 classes")
    assert "4 heads" in detail
    assert GRADCHECK_BACKBONE.widths == [2] and GRADCHECK_BACKBONE.blocks_per_stage == 1
