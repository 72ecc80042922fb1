# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Nested-loop reference implementations.

Deliberately written element by element, without the window helpers of
``src.nn.pooling``, so they can be compared against the vectorized ops.
"""

from typing import Optional

import numpy as np


def naive_conv2d(
    x: np.ndarray,
    kernel: np.ndarray,
    bias: Optional[np.ndarray] = None,
    stride: int = 1,
    padding: int = 0,
) -> np.ndarray:
    batch, in_ch, h, w = x.shape
    out_ch, _, kh, kw = kernel.shape
    padded = np.zeros((batch, in_ch, h + 2 * padding, w + 2 * padding), dtype=x.dtype)
    padded[:, :, padding : padding + h, padding : padding + w] = x
    oh = (h + 2 * padding - kh) // stride + 1
    ow = (w + 2 * padding - kw) // stride + 1
    out = np.zeros((batch, out_ch, oh, ow), dtype=x.dtype)
    for n in range(batch):
        for o in range(out_ch):
            for i in range(oh):
                for j in range(ow):
                    total = 0.0
                    for c in range(in_ch):
                        for u in range(kh):
                            for v in range(kw):
                                total += (
                                    padded[n, c, i * stride + u, j * stride + v]
                                    * kernel[o, c, u, v]
                                )
                    out[n, o, i, j] = total + (bias[o] if bias is not None else 0.0)
    return out


def naive_window_starts(extent: int, window: int, stride: int, ceil_mode: bool) -> list[int]:
    """Window start offsets along one axis.

    Floor mode keeps windows that fit entirely. Ceil mode keeps every window
    that starts inside the map, as long as the previous window did not
    already reach the last cell.
    """
    starts = []
    start = 0
    while start < extent:
        if ceil_mode:
            if starts and starts[-1] + window >= extent:
                break
        elif start + window > extent:
            break
        starts.append(start)
        start += stride
    return starts


def naive_local_avg_pool(
    x: np.ndarray, window: int, stride: int, ceil_mode: bool
) -> np.ndarray:
    batch, channels, h, w = x.shape
    rows = naive_window_starts(h, window, stride, ceil_mode)
    cols = naive_window_starts(w, window, stride, ceil_mode)
    out = np.zeros((batch, channels, len(rows), len(cols)), dtype=x.dtype)
    for n in range(batch):
        for c in range(channels):
            for i, r in enumerate(rows):
                for j, s in enumerate(cols):
                    total, count = 0.0, 0
                    for u in range(r, r + window):
                        for v in range(s, s + window):
                            if u < h and v < w:
                                total += x[n, c, u, v]
                                count += 1
                    out[n, c, i, j] = total / count
    return out


def naive_global_avg_pool(x: np.ndarray) -> np.ndarray:
    batch, channels, h, w = x.shape
    out = np.zeros((batch, channels), dtype=x.dtype)
    for n in range(batch):
        for c in range(channels):
            out[n, c] = sum(x[n, c, u, v] for u in range(h) for v in range(w)) / (h * w)
    return out


def naive_global_max_pool(x: np.ndarray) -> np.ndarray:
    batch, channels, h, w = x.shape
    out = np.zeros((batch, channels), dtype=x.dtype)
    for n in range(batch):
        for c in range(channels):
            best = x[n, c, 0, 0]
            for u in range(h):
                for v in range(w):
                    best = max(best, x[n, c, u, v])
            out[n, c] = best
    return out
