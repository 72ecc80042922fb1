# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Differentiable convolution and batch normalization.
"""

from typing import Optional

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from src.autodiff.functions import Function, add_bias, register_op
from src.autodiff.tensor import Tensor
from src.errors import DimensionError

# A FeatureMap is a [batch x channels x height x width] tensor.
FeatureMap = Tensor


def ensure_feature_map(x: np.ndarray, op: str) -> None:
    if x.ndim != 4:
        raise DimensionError(f"{op}: expected [batch x ch x h x w], got {x.shape}")


def conv_output_size(extent: int, kernel: int, stride: int, padding: int) -> int:
    return (extent + 2 * padding - kernel) // stride + 1


@register_op("conv2d")
class Conv2dOp(Function):
    """Cross-correlation via an im2col view and a tensordot."""

    @staticmethod
    def forward(ctx, x, kernel, stride: int = 1, padding: int = 0):
        ensure_feature_map(x, "conv2d")
        if kernel.ndim != 4:
            raise DimensionError(f"conv2d: kernel must be 4-D, got {kernel.shape}")
        _, channels, height, width = x.shape
        _, in_channels, kh, kw = kernel.shape
        if channels != in_channels:
            raise DimensionError(
                f"conv2d: input {x.shape} has {channels} channels, "
                f"kernel {kernel.shape} expects {in_channels}"
            )
        if height + 2 * padding < kh or width + 2 * padding < kw:
            raise DimensionError(
                f"conv2d: padded input {height + 2 * padding}x{width + 2 * padding} "
                f"is smaller than kernel {kh}x{kw}"
            )
        if padding:
            x = np.pad(x, ((0, 0), (0, 0), (padding, padding), (padding, padding)))
        windows = sliding_window_view(x, (kh, kw), axis=(2, 3))[
            :, :, ::stride, ::stride
        ]
        out = np.tensordot(windows, kernel, axes=([1, 4, 5], [1, 2, 3]))
        ctx.save_for_backward(x.shape, windows, kernel, stride, padding)
        return np.ascontiguousarray(out.transpose(0, 3, 1, 2))

    @staticmethod
    def backward(ctx, grad):
        padded_shape, windows, kernel, stride, padding = ctx.saved
        _, _, kh, kw = kernel.shape
        out_h, out_w = grad.shape[2], grad.shape[3]

        grad_kernel = np.tensordot(grad, windows, axes=([0, 2, 3], [0, 2, 3]))
        cols = np.tensordot(grad, kernel, axes=([1], [0]))
        grad_padded = np.zeros(padded_shape, dtype=grad.dtype)
        for i in range(kh):
            for j in range(kw):
                grad_padded[
                    :, :, i : i + stride * out_h : stride, j : j + stride * out_w : stride
                ] += cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        height = padded_shape[2] - 2 * padding
        width = padded_shape[3] - 2 * padding
        grad_x = grad_padded[:, :, padding : padding + height, padding : padding + width]
        return np.ascontiguousarray(grad_x), grad_kernel


@register_op("batch_norm")
class BatchNormOp(Function):
    """Per-channel normalization over batch and spatial axes."""

    @staticmethod
    def forward(
        ctx,
        x,
        gamma,
        beta,
        eps: float = 1e-5,
        mean: Optional[np.ndarray] = None,
        var: Optional[np.ndarray] = None,
    ):
        ensure_feature_map(x, "batch_norm")
        if gamma.shape != (x.shape[1],) or beta.shape != (x.shape[1],):
            raise DimensionError(
                f"batch_norm: affine params {gamma.shape} do not fit {x.shape}"
            )
        use_batch = mean is None
        if use_batch:
            mean = x.mean(axis=(0, 2, 3))
            var = x.var(axis=(0, 2, 3))
        view = (1, -1, 1, 1)
        inv_std = 1.0 / np.sqrt(var + eps)
        x_hat = (x - mean.reshape(view)) * inv_std.reshape(view)
        ctx.save_for_backward(x_hat, gamma, inv_std, use_batch)
        return x_hat * gamma.reshape(view) + beta.reshape(view)

    @staticmethod
    def backward(ctx, grad):
        x_hat, gamma, inv_std, use_batch = ctx.saved
        view = (1, -1, 1, 1)
        axes = (0, 2, 3)
        grad_gamma = (grad * x_hat).sum(axis=axes)
        grad_beta = grad.sum(axis=axes)
        grad_x_hat = grad * gamma.reshape(view)
        if not use_batch:
            return grad_x_hat * inv_std.reshape(view), grad_gamma, grad_beta
        count = grad.shape[0] * grad.shape[2] * grad.shape[3]
        grad_x = (inv_std.reshape(view) / count) * (
            count * grad_x_hat
            - grad_x_hat.sum(axis=axes, keepdims=True)
            - x_hat * (grad_x_hat * x_hat).sum(axis=axes, keepdims=True)
        )
        return grad_x, grad_gamma, grad_beta


def conv2d(
    x: Tensor,
    kernel: Tensor,
    bias: Optional[Tensor] = None,
    stride: int = 1,
    padding: int = 0,
) -> Tensor:
    out = Conv2dOp.apply(x, kernel, stride=stride, padding=padding)
    if bias is not None:
        out = add_bias(out, bias)
    return out


def batch_norm(
    x: Tensor,
    gamma: Tensor,
    beta: Tensor,
    eps: float = 1e-5,
    running_mean: Optional[np.ndarray] = None,
    running_var: Optional[np.ndarray] = None,
) -> Tensor:
    """Batch statistics when no running statistics are passed, else an affine map."""
    return BatchNormOp.apply(x, gamma, beta, eps=eps, mean=running_mean, var=running_var)
