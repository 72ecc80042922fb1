# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Parameter containers shared by layers, backbones and heads.
"""

import hashlib
import logging
from typing import Iterator

import numpy as np

from src.autodiff.tensor import Tensor
from src.errors import DimensionError

logger = logging.getLogger(__name__)


def kaiming_normal(
    rng: np.random.Generator, shape: tuple[int, ...], fan_in: int, gain: float = 2.0
) -> np.ndarray:
    """Fan-in scaled normal init; gain 2 suits ReLU stacks."""
    return rng.normal(0.0, np.sqrt(gain / fan_in), size=shape)


class Module:
    """Base class holding parameters, buffers and child modules.

    Parameters are ``Tensor`` attributes with ``requires_grad``; buffers are
    numpy arrays named in ``_buffer_names``; children are ``Module``
    attributes or lists of modules/parameters. Names follow attribute
    definition order, so every traversal is deterministic.
    """

    def __init__(self):
        self.training = True
        self._buffer_names: list[str] = []

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def register_buffer(self, name: str, value: np.ndarray) -> None:
        setattr(self, name, value)
        if name not in self._buffer_names:
            self._buffer_names.append(name)

    def _children(self) -> Iterator[tuple[str, object]]:
        for name, value in vars(self).items():
            if name.startswith("_"):
                continue
            if isinstance(value, (Module, Tensor)):
                yield name, value
            elif isinstance(value, list):
                for i, item in enumerate(value):
                    if isinstance(item, (Module, Tensor)):
                        yield f"{name}.{i}", item

    def named_parameters(self, prefix: str = "") -> dict[str, Tensor]:
        params: dict[str, Tensor] = {}
        for name, value in self._children():
            full = f"{prefix}{name}"
            if isinstance(value, Module):
                params.update(value.named_parameters(prefix=f"{full}."))
            elif value.requires_grad:
                params[full] = value
        return params

    def parameters(self) -> list[Tensor]:
        return list(self.named_parameters().values())

    def named_buffers(self, prefix: str = "") -> dict[str, np.ndarray]:
        buffers = {f"{prefix}{name}": getattr(self, name) for name in self._buffer_names}
        for name, value in self._children():
            if isinstance(value, Module):
                buffers.update(value.named_buffers(prefix=f"{prefix}{name}."))
        return buffers

    def train(self, mode: bool = True) -> "Module":
        self.training = mode
        for _, value in self._children():
            if isinstance(value, Module):
                value.train(mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    def state_dict(self) -> dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters().items()}
        state.update(
            {name: np.array(b, copy=True) for name, b in self.named_buffers().items()}
        )
        return state

    def load_state_dict(self, state: dict[str, np.ndarray]) -> None:
        params = self.named_parameters()
        buffers = self.named_buffers()
        expected = set(params) | set(buffers)
        missing = expected - set(state)
        unexpected = set(state) - expected
        if missing or unexpected:
            raise DimensionError(
                f"State dict mismatch: missing={sorted(missing)} "
                f"unexpected={sorted(unexpected)}"
            )
        for name, param in params.items():
            value = np.asarray(state[name])
            if value.shape != param.shape:
                raise DimensionError(
                    f"Parameter {name}: stored shape {value.shape} != {param.shape}"
                )
            param.data[...] = value
        for name, buffer in buffers.items():
            value = np.asarray(state[name])
            if value.shape != buffer.shape:
                raise DimensionError(
                    f"Buffer {name}: stored shape {value.shape} != {buffer.shape}"
                )
            buffer[...] = value

    def checksum(self) -> str:
        """sha256 over every parameter and buffer, in name order."""
        digest = hashlib.sha256()
        for name, value in sorted(self.state_dict().items()):
            digest.update(name.encode())
            digest.update(np.ascontiguousarray(value, dtype="<f8").tobytes())
        return digest.hexdigest()
