# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Configurable small residual CNN feature extractor.

A 3x3 stem is followed by one residual stage per entry of ``widths``; every
stage but the first halves the resolution with a stride-2 first block. The
default desk-scale widths are [16, 32, 64, 128]; ResNet18 is
``widths=[64, 128, 256, 512], blocks_per_stage=2``.
"""

import logging
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator

from src.autodiff.functions import relu
from src.autodiff.tensor import Tensor
from src.errors import ConfigError
from src.nn.functional import conv_output_size
from src.nn.layers import BatchNorm2d, Conv2d, ResidualBlock
from src.nn.module import Module

logger = logging.getLogger(__name__)

DTYPES = {"float64": np.float64, "float32": np.float32}


class BackboneConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    in_channels: int = Field(default=3, ge=1)
    input_size: int = Field(default=32, ge=1, description="Input height and width")
    widths: list[int] = Field(default_factory=lambda: [16, 32, 64, 128])
    blocks_per_stage: int = Field(default=1, ge=1)
    dtype: Literal["float64", "float32"] = "float64"

    @field_validator("widths")
    @classmethod
    def _positive_widths(cls, value: list[int]) -> list[int]:
        if not value or any(w < 1 for w in value):
            raise ValueError("widths must be a non-empty list of positive ints")
        return value

    def stage_strides(self) -> list[int]:
        return [1] + [2] * (len(self.widths) - 1)

    def output_extent(self) -> int:
        """Final feature-map side length, validating every downsampling."""
        extent = self.input_size
        for stage, stride in enumerate(self.stage_strides()):
            if stride > 1 and extent < 2:
                raise ConfigError(
                    f"input_size {self.input_size} is too small for "
                    f"{len(self.widths)} stages (stage {stage} receives {extent}x{extent})",
                    key="backbone.input_size",
                )
            extent = conv_output_size(extent, 3, stride, 1)
        return extent


class Backbone(Module):
    def __init__(self, config: BackboneConfig, rng: Optional[np.random.Generator] = None):
        super().__init__()
        rng = rng or np.random.default_rng(0)
        dtype = DTYPES[config.dtype]
        self.config = config
        self.dtype = dtype
        self.output_extent = config.output_extent()
        self.out_channels = config.widths[-1]

        self.stem = Conv2d(
            config.in_channels, config.widths[0], 3, 1, 1, bias=False, rng=rng, dtype=dtype
        )
        self.stem_bn = BatchNorm2d(config.widths[0], dtype=dtype)
        self.blocks: list[ResidualBlock] = []
        in_channels = config.widths[0]
        for width, stride in zip(config.widths, config.stage_strides()):
            for b in range(config.blocks_per_stage):
                self.blocks.append(
                    ResidualBlock(
                        in_channels, width, stride if b == 0 else 1, rng=rng, dtype=dtype
                    )
                )
                in_channels = width

    def input_tensor(self, images: np.ndarray) -> Tensor:
        """Wrap a batch of images in the backbone's dtype."""
        return Tensor(images, dtype=self.dtype)

    def forward(self, x: Tensor) -> Tensor:
        expected = (self.config.in_channels, self.config.input_size, self.config.input_size)
        if tuple(x.shape[1:]) != expected:
            raise ConfigError(
                f"Backbone expects inputs [batch x {expected[0]} x {expected[1]} x "
                f"{expected[2]}], got {x.shape}"
            )
        out = relu(self.stem_bn(self.stem(x)))
        for block in self.blocks:
            out = block(out)
        return out


def build_backbone(
    config: BackboneConfig, rng: Optional[np.random.Generator] = None
) -> Backbone:
    backbone = Backbone(config, rng=rng)
    logger.info(
        f"Built backbone widths={config.widths} blocks={config.blocks_per_stage} "
        f"-> [{backbone.out_channels} x {backbone.output_extent} x {backbone.output_extent}]"
    )
    return backbone
