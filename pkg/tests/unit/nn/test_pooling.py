# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from src.autodiff.gradcheck import check_gradients
from src.autodiff.tensor import Tensor
from src.errors import DimensionError
from src.nn.pooling import (
    concat_gap_gmp,
    global_avg_pool,
    global_max_pool,
    local_avg_pool,
    pooled_extent,
    window_bounds,
)
from src.verify.oracles import naive_local_avg_pool, naive_window_starts


class TestGeometry:
    """Window counts and bounds."""

    def test_floor_mode_count(self):
        assert pooled_extent(4, 2, 2, ceil_mode=False) == 2
        assert pooled_extent(5, 2, 2, ceil_mode=False) == 2

    def test_ceil_mode_count(self):
        assert pooled_extent(4, 3, 2, ceil_mode=True) == 2
        assert pooled_extent(5, 2, 2, ceil_mode=True) == 3

    def test_last_window_starts_inside_map(self):
        # At extent 4, pw=2, s=4 a second window would start at 4, off the map.
        for extent, window, stride in [(4, 2, 4), (3, 1, 3), (7, 5, 3)]:
            count = pooled_extent(extent, window, stride, ceil_mode=True)
            assert (count - 1) * stride < extent

    def test_window_larger_than_map_without_ceil_is_rejected(self):
        with pytest.raises(DimensionError):
            pooled_extent(2, 3, 1, ceil_mode=False)

    def test_bounds_are_clipped(self):
        assert window_bounds(4, 3, 2, ceil_mode=True) == [(0, 3), (2, 4)]

    @pytest.mark.parametrize("extent", range(1, 10))
    @pytest.mark.parametrize("window", range(1, 6))
    @pytest.mark.parametrize("stride", range(1, 4))
    def test_counts_match_oracle(self, extent, window, stride):
        starts = naive_window_starts(extent, window, stride, ceil_mode=True)
        assert pooled_extent(extent, window, stride, ceil_mode=True) == len(starts)
        if window <= extent:
            floor_starts = naive_window_starts(extent, window, stride, ceil_mode=False)
            assert pooled_extent(extent, window, stride, ceil_mode=False) == len(floor_starts)


class TestLocalAvgPool:
    def test_constant_input(self):
        out = local_avg_pool(Tensor(np.ones((1, 1, 4, 4))), 2, 2, ceil_mode=False)
        assert_array_equal(out.data, np.ones((1, 1, 2, 2)))

    def test_ceil_mode_counts_only_valid_cells(self):
        x = np.random.default_rng(5).standard_normal((1, 1, 4, 4))
        out = local_avg_pool(Tensor(x), 3, 2, ceil_mode=True).data
        assert out.shape == (1, 1, 2, 2)
        assert out[0, 0, 0, 0] == pytest.approx(x[0, 0, 0:3, 0:3].sum() / 9)
        assert out[0, 0, 0, 1] == pytest.approx(x[0, 0, 0:3, 2:4].sum() / 6)
        assert out[0, 0, 1, 0] == pytest.approx(x[0, 0, 2:4, 0:3].sum() / 6)
        assert out[0, 0, 1, 1] == pytest.approx(x[0, 0, 2:4, 2:4].sum() / 4)
        assert_allclose(out, naive_local_avg_pool(x, 3, 2, True), atol=1e-12)

    def test_full_window_equals_global_average(self):
        x = np.random.default_rng(6).standard_normal((2, 3, 5, 5))
        local = local_avg_pool(Tensor(x), 5, 1).data
        assert local.shape == (2, 3, 1, 1)
        assert_allclose(local[:, :, 0, 0], global_avg_pool(Tensor(x)).data, atol=1e-12)

    def test_random_configs_match_oracle(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            h, w = (int(v) for v in rng.integers(2, 9, size=2))
            window = int(rng.integers(1, min(h, w) + 1))
            stride = int(rng.integers(1, 4))
            ceil_mode = bool(rng.integers(2))
            x = rng.standard_normal((2, 2, h, w))
            got = local_avg_pool(Tensor(x), window, stride, ceil_mode).data
            assert_allclose(got, naive_local_avg_pool(x, window, stride, ceil_mode), atol=1e-10)

    def test_gradient(self):
        x = np.random.default_rng(8).standard_normal((1, 2, 5, 5))
        result = check_gradients(lambda t: local_avg_pool(t, 3, 2, ceil_mode=True), [x])
        assert result.passed, result.describe()

    def test_requires_feature_map(self):
        with pytest.raises(DimensionError):
            local_avg_pool(Tensor(np.ones((4, 4))), 2, 2)


class TestGlobalPools:
    def test_concat_of_constant_map(self):
        out = concat_gap_gmp(Tensor(np.full((1, 3, 2, 2), 0.7))).data
        assert_allclose(out, np.full((1, 6), 0.7))

    def test_concat_single_channel(self):
        x = Tensor(np.array([1.0, 2.0, 3.0, 4.0]).reshape(1, 1, 2, 2))
        assert_allclose(concat_gap_gmp(x).data, [[2.5, 4.0]])

    def test_max_pool_gradient_goes_to_first_maximum(self):
        from src.autodiff import functions as F
        from src.autodiff.tensor import Tape

        x = Tensor(np.array([3.0, 1.0, 3.0, 0.0]).reshape(1, 1, 2, 2))
        with Tape() as tape:
            tape.watch(x)
            root = F.sum(global_max_pool(x))
        assert_array_equal(tape.backward(root)[x].reshape(-1), [1.0, 0.0, 0.0, 0.0])

    def test_concat_gradient_reaches_both_branches(self):
        rng = np.random.default_rng(9)
        x = rng.permutation(2 * 3 * 3 * 3).reshape(2, 3, 3, 3) * 0.1
        result = check_gradients(concat_gap_gmp, [x])
        assert result.passed, result.describe()
