# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.autodiff.tensor import Tape, Tensor
from src.errors import ConfigError, NumericError, TargetIndexError
from src.heads.dap import (
    LAMBDA_FLOOR,
    DapHead,
    fuse_score,
    head_loss,
    head_softmax,
    project_lambdas,
    route_max_loss,
    split_windows,
    update_lambdas,
)
from src.heads.types import Routing


def _feature_map(seed=0, batch=3, channels=5, extent=4):
    return Tensor(np.random.default_rng(seed).standard_normal((batch, channels, extent, extent)))


class TestSplitWindows:
    def test_four_windows_on_4x4_map(self):
        head = DapHead(5, 3, 4, window=3, stride=2, ceil_mode=True)
        features = split_windows(_feature_map(), head)
        assert head.num_heads == 4
        assert len(features) == 4
        assert all(f.shape == (3, 5) for f in features)

    def test_four_windows_on_8x8_map_with_pw_6(self):
        head = DapHead(5, 3, 8, window=6, stride=2, ceil_mode=True)
        assert head.grid == (2, 2)

    def test_full_extent_window_is_gap(self):
        y = _feature_map()
        head = DapHead(5, 3, 4, window=4, stride=1)
        (feature,) = split_windows(y, head)
        assert_allclose(feature.data, y.data.mean(axis=(2, 3)), atol=1e-12)

    def test_windows_are_row_major(self):
        y = Tensor(np.arange(16.0).reshape(1, 1, 4, 4))
        head = DapHead(1, 2, 4, window=2, stride=2, ceil_mode=False)
        values = [f.data[0, 0] for f in split_windows(y, head)]
        assert values == [2.5, 4.5, 10.5, 12.5]

    def test_lambdas_start_uniform(self):
        head = DapHead(5, 3, 4)
        assert_allclose(head.lambdas, np.full(4, 0.25))


class TestSoftmaxAndLoss:
    def test_zero_logits_are_uniform(self):
        probs = head_softmax(Tensor(np.zeros((2, 4))), Tensor(np.zeros((4, 10)))).data
        assert_allclose(probs, np.full((2, 10), 0.1))

    def test_certain_prediction_has_zero_loss(self):
        probs = Tensor([[1.0, 0.0]])
        assert head_loss(probs, np.array([0]), 1.0).item() == pytest.approx(0.0, abs=1e-12)

    def test_lambda_enters_the_log(self):
        probs = Tensor([[1.0, 0.0]])
        assert head_loss(probs, np.array([0]), 0.25).item() == pytest.approx(-math.log(0.25))

    def test_uniform_ten_classes(self):
        probs = Tensor(np.full((4, 10), 0.1))
        loss = head_loss(probs, np.array([0, 3, 5, 9]), 1.0).item()
        assert loss == pytest.approx(math.log(10))

    def test_zero_probability_is_floored(self):
        loss = head_loss(Tensor([[0.0, 1.0]]), np.array([0]), 1.0).item()
        assert loss == pytest.approx(-math.log(1e-12))

    def test_probability_is_floored_before_lambda_scaling(self):
        loss = head_loss(Tensor([[0.0, 1.0]]), np.array([0]), 0.25).item()
        assert loss == pytest.approx(-math.log(0.25 * 1e-12))

    def test_target_out_of_range(self):
        with pytest.raises(TargetIndexError):
            head_loss(Tensor([[0.5, 0.5]]), np.array([2]), 1.0)


class TestRouting:
    def test_tie_goes_to_lowest_index(self):
        losses = [Tensor(v) for v in (0.2, 0.7, 0.7, 0.1)]
        index, routed = route_max_loss(losses)
        assert index == 1
        assert routed.item() == 0.7

    def test_single_head(self):
        index, routed = route_max_loss([Tensor(1.3)])
        assert index == 0
        assert routed.item() == 1.3

    def test_nan_loss_aborts(self):
        with pytest.raises(NumericError):
            route_max_loss([Tensor(0.1), Tensor(float("nan"))])

    def test_only_selected_head_receives_gradient(self):
        head = DapHead(5, 3, 4, rng=np.random.default_rng(2))
        y = _feature_map(seed=1)
        with Tape() as tape:
            tape.watch(*head.heads)
            outputs = head(y, np.array([0, 1, 2]))
            grads = tape.backward(outputs.routed_loss)
        for i, weight in enumerate(head.heads):
            if i == outputs.selected:
                assert np.any(grads[weight] != 0)
            else:
                assert_array_equal(grads[weight], np.zeros_like(weight.data))

    def test_per_sample_routing_counts_every_sample(self):
        head = DapHead(5, 3, 4, routing=Routing.PER_SAMPLE, rng=np.random.default_rng(2))
        outputs = head(_feature_map(seed=4, batch=6), np.array([0, 1, 2, 0, 1, 2]))
        assert outputs.routing_counts().sum() == 6
        sample = np.stack([
            -np.log(lam * p.data[np.arange(6), [0, 1, 2, 0, 1, 2]])
            for p, lam in zip(outputs.probs, head.lambdas)
        ], axis=1)
        assert outputs.routed_loss.item() == pytest.approx(sample.max(axis=1).mean())

    def test_permuting_heads_keeps_routed_loss_and_score(self):
        rng = np.random.default_rng(5)
        features = [Tensor(rng.standard_normal((4, 3))) for _ in range(4)]
        weights = [Tensor(rng.standard_normal((3, 2))) for _ in range(4)]
        lambdas = np.array([0.1, 0.2, 0.3, 0.4])
        targets = np.array([0, 1, 1, 0])

        def evaluate(order):
            probs = [head_softmax(features[i], weights[i]) for i in order]
            losses = [head_loss(p, targets, lambdas[i]) for p, i in zip(probs, order)]
            _, routed = route_max_loss(losses)
            score = fuse_score([p.data for p in probs], lambdas[list(order)]).score
            return routed.item(), score

        base_loss, base_score = evaluate([0, 1, 2, 3])
        perm_loss, perm_score = evaluate([2, 0, 3, 1])
        assert perm_loss == base_loss
        assert_allclose(perm_score, base_score, atol=1e-15)


class TestLambdas:
    def test_equal_losses_keep_uniform(self):
        lambdas = np.full(4, 0.25)
        for _ in range(50):
            lambdas = update_lambdas([0.5] * 4, lambdas, lr=0.1)
        assert_allclose(lambdas, np.full(4, 0.25), atol=1e-12)

    def test_single_head_is_pinned(self):
        assert_array_equal(update_lambdas([2.0], np.array([1.0]), lr=0.3), [1.0])

    def test_two_heads_stay_on_simplex(self):
        out = update_lambdas([0.1, 0.9], np.array([0.5, 0.5]), lr=0.1)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)
        assert out.min() >= LAMBDA_FLOOR

    def test_projection_clamps_to_floor(self):
        out = project_lambdas(np.array([5.0, -1.0, 0.0]), lambda_floor=0.01)
        assert out.sum() == pytest.approx(1.0, abs=1e-12)
        assert out[1] == pytest.approx(0.01)
        assert out[2] == pytest.approx(0.01)

    def test_projection_many_uneven_steps(self):
        rng = np.random.default_rng(0)
        lambdas = np.full(4, 0.25)
        for _ in range(500):
            lambdas = update_lambdas(list(rng.random(4)), lambdas, lr=float(rng.random()))
            assert abs(lambdas.sum() - 1.0) <= 1e-12
            assert lambdas.min() >= LAMBDA_FLOOR

    def test_infeasible_floor(self):
        with pytest.raises(ConfigError):
            DapHead(5, 3, 4, lambda_floor=0.3)


class TestFuseScore:
    def test_identical_distributions(self):
        p = np.array([[0.2, 0.8], [0.6, 0.4]])
        prediction = fuse_score([p, p, p], np.array([0.2, 0.3, 0.5]))
        assert_allclose(prediction.score, p)
        assert_array_equal(prediction.label, [1, 0])

    def test_single_head(self):
        p = np.array([[0.3, 0.7]])
        assert_allclose(fuse_score([p], np.array([1.0])).score, p)

    def test_near_one_hot_lambda(self):
        rng = np.random.default_rng(1)
        probs = [rng.dirichlet(np.ones(3), size=5) for _ in range(4)]
        lambdas = project_lambdas(np.array([1.0, 0.0, 0.0, 0.0]))
        score = fuse_score(probs, lambdas).score
        assert np.max(np.abs(score - probs[0])) <= 4 * LAMBDA_FLOOR
        assert_allclose(score.sum(axis=1), np.ones(5), atol=1e-9)

    def test_ties_pick_lowest_class(self):
        p = np.array([[0.5, 0.5]])
        assert fuse_score([p], np.array([1.0])).label[0] == 0
