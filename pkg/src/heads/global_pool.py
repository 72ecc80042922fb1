# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Baseline heads: one global pool followed by a single linear softmax classifier.

They reuse the DAP interface with a single classifier whose weight lambda is
pinned to 1, so the loss is plain cross-entropy.
"""

from typing import Optional

import numpy as np

from src.autodiff.tensor import DEFAULT_DTYPE, Tensor
from src.errors import ConfigError
from src.heads.dap import ClassifierHead
from src.heads.types import HeadKind
from src.nn.layers import Linear
from src.nn.pooling import concat_gap_gmp, global_avg_pool, global_max_pool

_POOLS = {
    HeadKind.GAP: (global_avg_pool, 1),
    HeadKind.GMP: (global_max_pool, 1),
    HeadKind.GAP_GMP: (concat_gap_gmp, 2),
}


class GlobalPoolHead(ClassifierHead):
    def __init__(
        self,
        kind: HeadKind,
        channels: int,
        num_classes: int,
        bias: bool = True,
        rng: Optional[np.random.Generator] = None,
        dtype=DEFAULT_DTYPE,
    ):
        super().__init__()
        kind = HeadKind(kind)
        if kind not in _POOLS:
            raise ConfigError(f"{kind.value} is not a global pooling head", key="head.kind")
        self.kind = kind
        self.num_classes = num_classes
        self._pool, width = _POOLS[kind]
        self.classifier = Linear(
            width * channels, num_classes, bias=bias, rng=rng, dtype=dtype
        )
        self.register_buffer("lambdas", np.ones(1, dtype=np.float64))

    @property
    def in_features(self) -> int:
        return self.classifier.weight.shape[0]

    def features(self, y: Tensor) -> list[Tensor]:
        return [self._pool(y)]

    def logits(self, index: int, feature: Tensor) -> Tensor:
        return self.classifier(feature)
