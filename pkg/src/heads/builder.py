# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

import logging
from typing import Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from src.autodiff.tensor import DEFAULT_DTYPE
from src.errors import ConfigError
from src.heads.dap import LAMBDA_FLOOR, ClassifierHead, DapHead
from src.heads.global_pool import GlobalPoolHead
from src.heads.types import HeadKind, Routing

logger = logging.getLogger(__name__)


class HeadConfig(BaseModel):
    model_config = ConfigDict(extra="forbid", use_enum_values=False)

    kind: HeadKind = HeadKind.DAP
    pw: int = Field(default=3, ge=1, description="DAP pooling window side")
    stride: int = Field(default=2, ge=1, description="DAP pooling stride")
    ceil_mode: bool = True
    routing: Routing = Routing.PER_BATCH
    lambda_floor: float = Field(default=LAMBDA_FLOOR, gt=0.0, le=1.0)
    bias: bool = Field(default=True, description="Bias on global-pool classifiers")


def build_head(
    kind: HeadKind | str,
    channels: int,
    num_classes: int,
    feature_extent: int,
    config: Optional[HeadConfig] = None,
    rng: Optional[np.random.Generator] = None,
    dtype=DEFAULT_DTYPE,
) -> ClassifierHead:
    """Build a GAP, GMP, GAP+GMP or DAP head on a [channels x extent x extent] map."""
    try:
        kind = HeadKind(kind)
    except ValueError:
        raise ConfigError(
            f"Unknown head kind {kind!r}; expected one of {[k.value for k in HeadKind]}",
            key="head.kind",
        ) from None
    if num_classes < 2:
        raise ConfigError(f"num_classes must be >= 2, got {num_classes}")
    config = config or HeadConfig(kind=kind)
    rng = rng or np.random.default_rng(0)

    if kind == HeadKind.DAP:
        head = DapHead(
            channels,
            num_classes,
            feature_extent,
            window=config.pw,
            stride=config.stride,
            ceil_mode=config.ceil_mode,
            routing=config.routing,
            lambda_floor=config.lambda_floor,
            rng=rng,
            dtype=dtype,
        )
    else:
        head = GlobalPoolHead(
            kind, channels, num_classes, bias=config.bias, rng=rng, dtype=dtype
        )
    logger.info(f"Built {kind.value} head with {head.num_heads} classifier(s)")
    return head
