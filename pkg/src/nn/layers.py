# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

from typing import Optional

import numpy as np

from src.autodiff.functions import add, add_bias, matmul, relu
from src.autodiff.tensor import DEFAULT_DTYPE, Tensor
from src.errors import DimensionError
from src.nn.functional import batch_norm, conv2d, conv_output_size
from src.nn.module import Module, kaiming_normal


class Conv2d(Module):
    """2-D cross-correlation layer."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        kernel_size: int,
        stride: int = 1,
        padding: int = 0,
        bias: bool = True,
        rng: Optional[np.random.Generator] = None,
        dtype=DEFAULT_DTYPE,
    ):
        super().__init__()
        if stride < 1 or padding < 0 or kernel_size < 1:
            raise DimensionError(
                f"Conv2d: invalid kernel={kernel_size} stride={stride} padding={padding}"
            )
        rng = rng or np.random.default_rng(0)
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kernel_size * kernel_size
        self.kernel = Tensor(
            kaiming_normal(
                rng, (out_channels, in_channels, kernel_size, kernel_size), fan_in
            ),
            requires_grad=True,
            dtype=dtype,
        )
        self.bias = (
            Tensor(np.zeros(out_channels), requires_grad=True, dtype=dtype)
            if bias
            else None
        )

    def output_size(self, extent: int) -> int:
        return conv_output_size(extent, self.kernel.shape[2], self.stride, self.padding)

    def forward(self, x: Tensor) -> Tensor:
        return conv2d(x, self.kernel, self.bias, stride=self.stride, padding=self.padding)


class BatchNorm2d(Module):
    """Batch normalization with exponential-moving-average running statistics."""

    def __init__(
        self,
        channels: int,
        momentum: float = 0.1,
        eps: float = 1e-5,
        dtype=DEFAULT_DTYPE,
    ):
        super().__init__()
        if not 0.0 < momentum < 1.0:
            raise DimensionError(f"BatchNorm2d momentum must be in (0, 1), got {momentum}")
        self.momentum = momentum
        self.eps = eps
        self.gamma = Tensor(np.ones(channels), requires_grad=True, dtype=dtype)
        self.beta = Tensor(np.zeros(channels), requires_grad=True, dtype=dtype)
        self.register_buffer("running_mean", np.zeros(channels, dtype=dtype))
        self.register_buffer("running_var", np.ones(channels, dtype=dtype))

    def forward(self, x: Tensor) -> Tensor:
        if not self.training:
            return batch_norm(
                x, self.gamma, self.beta, self.eps, self.running_mean, self.running_var
            )
        out = batch_norm(x, self.gamma, self.beta, self.eps)
        data = x.data
        count = data.shape[0] * data.shape[2] * data.shape[3]
        batch_mean = data.mean(axis=(0, 2, 3))
        batch_var = data.var(axis=(0, 2, 3))
        if count > 1:
            batch_var = batch_var * (count / (count - 1))
        m = self.momentum
        self.running_mean[...] = (1 - m) * self.running_mean + m * batch_mean
        self.running_var[...] = (1 - m) * self.running_var + m * batch_var
        return out


class Linear(Module):
    """Fully connected map ``x @ W (+ b)`` with W of shape [in x out]."""

    def __init__(
        self,
        in_features: int,
        out_features: int,
        bias: bool = True,
        rng: Optional[np.random.Generator] = None,
        dtype=DEFAULT_DTYPE,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.weight = Tensor(
            kaiming_normal(rng, (in_features, out_features), in_features, gain=1.0),
            requires_grad=True,
            dtype=dtype,
        )
        self.bias = (
            Tensor(np.zeros(out_features), requires_grad=True, dtype=dtype)
            if bias
            else None
        )

    def forward(self, x: Tensor) -> Tensor:
        out = matmul(x, self.weight)
        if self.bias is not None:
            out = add_bias(out, self.bias)
        return out


class ResidualBlock(Module):
    """Basic residual block: relu(bn(conv(relu(bn(conv(x))))) + shortcut(x))."""

    def __init__(
        self,
        in_channels: int,
        out_channels: int,
        stride: int = 1,
        rng: Optional[np.random.Generator] = None,
        dtype=DEFAULT_DTYPE,
    ):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        self.conv1 = Conv2d(
            in_channels, out_channels, 3, stride, 1, bias=False, rng=rng, dtype=dtype
        )
        self.bn1 = BatchNorm2d(out_channels, dtype=dtype)
        self.conv2 = Conv2d(
            out_channels, out_channels, 3, 1, 1, bias=False, rng=rng, dtype=dtype
        )
        self.bn2 = BatchNorm2d(out_channels, dtype=dtype)
        self.projection: Optional[Conv2d] = None
        self.projection_bn: Optional[BatchNorm2d] = None
        if stride != 1 or in_channels != out_channels:
            self.projection = Conv2d(
                in_channels, out_channels, 1, stride, 0, bias=False, rng=rng, dtype=dtype
            )
            self.projection_bn = BatchNorm2d(out_channels, dtype=dtype)

    def forward(self, x: Tensor) -> Tensor:
        out = relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        shortcut = x
        if self.projection is not None:
            shortcut = self.projection_bn(self.projection(x))
        if out.shape != shortcut.shape:
            raise DimensionError(
                f"Residual addends differ: {out.shape} vs {shortcut.shape}"
            )
        return relu(add(out, shortcut))
