# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import numpy as np
from numpy.testing import assert_allclose

from src.verify.oracles import (
    naive_conv2d,
    naive_global_avg_pool,
    naive_global_max_pool,
    naive_local_avg_pool,
    naive_window_starts,
)


def test_window_starts():
    assert naive_window_starts(4, 3, 2, ceil_mode=True) == [0, 2]
    assert naive_window_starts(4, 3, 2, ceil_mode=False) == [0]
    assert naive_window_starts(5, 2, 2, ceil_mode=True) == [0, 2, 4]
    assert naive_window_starts(4, 4, 1, ceil_mode=True) == [0]


def test_partial_window_averages_valid_cells():
    x = np.arange(16, dtype=np.float64).reshape(1, 1, 4, 4)
    out = naive_local_avg_pool(x, 3, 2, ceil_mode=True)
    # bottom-right window covers rows 2..3, cols 2..3 only
    assert out[0, 0, 1, 1] == (10 + 11 + 14 + 15) / 4


def test_global_pools():
    x = np.arange(8, dtype=np.float64).reshape(1, 2, 2, 2)
    assert_allclose(naive_global_avg_pool(x), [[1.5, 5.5]])
    assert_allclose(naive_global_max_pool(x), [[3.0, 7.0]])


def test_conv_identity_kernel():
    x = np.random.default_rng(0).random((1, 1, 4, 4))
    kernel = np.zeros((1, 1, 3, 3))
    kernel[0, 0, 1, 1] = 1.0
    assert_allclose(naive_conv2d(x, kernel, padding=1), x)
