# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Global and local pooling over feature maps.

Local average pooling supports ceil-mode placement: the last window may
overhang the border, and each window averages only its in-bounds cells.
"""

import numpy as np

from src.autodiff.functions import Function, concat, register_op
from src.autodiff.tensor import Tensor
from src.errors import DimensionError
from src.nn.functional import ensure_feature_map


def pooled_extent(extent: int, window: int, stride: int, ceil_mode: bool) -> int:
    """Number of window positions along one spatial axis."""
    if window < 1 or stride < 1:
        raise DimensionError(
            f"pooling window ({window}) and stride ({stride}) must be >= 1"
        )
    if extent < 1:
        raise DimensionError(f"cannot pool an axis of extent {extent}")
    if not ceil_mode:
        if window > extent:
            raise DimensionError(
                f"pooling window {window} exceeds extent {extent} (ceil_mode off)"
            )
        return (extent - window) // stride + 1
    count = -(-max(extent - window, 0) // stride) + 1
    # The last window must start inside the map.
    if (count - 1) * stride >= extent:
        count -= 1
    return count


def window_bounds(
    extent: int, window: int, stride: int, ceil_mode: bool
) -> list[tuple[int, int]]:
    """[start, stop) of every window along one axis, clipped to the map."""
    count = pooled_extent(extent, window, stride, ceil_mode)
    return [
        (i * stride, min(i * stride + window, extent)) for i in range(count)
    ]


@register_op("global_avg_pool")
class GlobalAvgPool(Function):
    @staticmethod
    def forward(ctx, x):
        ensure_feature_map(x, "global_avg_pool")
        count = x.shape[2] * x.shape[3]
        ctx.save_for_backward(x.shape, count)
        return x.sum(axis=(2, 3)) / count

    @staticmethod
    def backward(ctx, grad):
        shape, count = ctx.saved
        return (np.broadcast_to((grad / count)[:, :, None, None], shape).copy(),)


@register_op("global_max_pool")
class GlobalMaxPool(Function):
    @staticmethod
    def forward(ctx, x):
        ensure_feature_map(x, "global_max_pool")
        batch, channels = x.shape[:2]
        flat = x.reshape(batch, channels, -1)
        # argmax returns the first maximum, i.e. the lowest flat index on ties.
        index = flat.argmax(axis=2)
        ctx.save_for_backward(x.shape, x.dtype, index)
        return np.take_along_axis(flat, index[:, :, None], axis=2)[:, :, 0]

    @staticmethod
    def backward(ctx, grad):
        shape, dtype, index = ctx.saved
        batch, channels = shape[:2]
        flat = np.zeros((batch, channels, shape[2] * shape[3]), dtype=dtype)
        np.put_along_axis(flat, index[:, :, None], grad[:, :, None], axis=2)
        return (flat.reshape(shape),)


@register_op("local_avg_pool")
class LocalAvgPool(Function):
    @staticmethod
    def forward(ctx, x, window: int = 1, stride: int = 1, ceil_mode: bool = False):
        ensure_feature_map(x, "local_avg_pool")
        rows = window_bounds(x.shape[2], window, stride, ceil_mode)
        cols = window_bounds(x.shape[3], window, stride, ceil_mode)
        out = np.empty(x.shape[:2] + (len(rows), len(cols)), dtype=x.dtype)
        for i, (r0, r1) in enumerate(rows):
            for j, (c0, c1) in enumerate(cols):
                count = (r1 - r0) * (c1 - c0)
                out[:, :, i, j] = x[:, :, r0:r1, c0:c1].sum(axis=(2, 3)) / count
        ctx.save_for_backward(x.shape, x.dtype, rows, cols)
        return out

    @staticmethod
    def backward(ctx, grad):
        shape, dtype, rows, cols = ctx.saved
        result = np.zeros(shape, dtype=dtype)
        for i, (r0, r1) in enumerate(rows):
            for j, (c0, c1) in enumerate(cols):
                count = (r1 - r0) * (c1 - c0)
                result[:, :, r0:r1, c0:c1] += (grad[:, :, i, j] / count)[
                    :, :, None, None
                ]
        return (result,)


def global_avg_pool(x: Tensor) -> Tensor:
    """Mean over all spatial positions: [B, C, H, W] -> [B, C]."""
    return GlobalAvgPool.apply(x)


def global_max_pool(x: Tensor) -> Tensor:
    """Max over all spatial positions: [B, C, H, W] -> [B, C]."""
    return GlobalMaxPool.apply(x)


def local_avg_pool(
    x: Tensor, window: int, stride: int, ceil_mode: bool = False
) -> Tensor:
    """Windowed mean with count-include-valid averaging: [B, C, n1, n2]."""
    return LocalAvgPool.apply(x, window=window, stride=stride, ceil_mode=ceil_mode)


def concat_gap_gmp(x: Tensor) -> Tensor:
    """Channel-wise concatenation of the average and max pools: [B, 2C]."""
    return concat([global_avg_pool(x), global_max_pool(x)], axis=1)
