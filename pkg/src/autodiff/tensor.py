# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Dense tensors and the define-by-run differentiation tape.

A ``Tape`` is opened as a context manager; every differentiable op executed
while it is active appends a ``Node`` to it. ``Tape.backward`` walks the nodes
in reverse order and accumulates gradients into the registered leaves.
"""

import logging
import os
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Optional, Sequence, Union

import numpy as np

from src.errors import ContractError, DimensionError

logger = logging.getLogger(__name__)

DEFAULT_DTYPE = np.float64

ArrayLike = Union[np.ndarray, Sequence[Any], float, int]

_debug = os.getenv("DAP_DEBUG", "0").lower() in {"1", "true", "yes"}


def set_debug(enabled: bool) -> None:
    """Toggle finiteness assertions on every forward op."""
    global _debug
    _debug = enabled


def debug_enabled() -> bool:
    return _debug


class Tensor:
    """A dense n-dimensional array that can take part in differentiation."""

    def __init__(
        self,
        data: ArrayLike,
        requires_grad: bool = False,
        dtype: Optional[np.dtype] = None,
        name: Optional[str] = None,
    ):
        if isinstance(data, Tensor):
            data = data.data
        if dtype is None:
            dtype = data.dtype if isinstance(data, np.ndarray) and data.dtype in (
                np.float32,
                np.float64,
            ) else DEFAULT_DTYPE
        self.data: np.ndarray = np.array(data, dtype=dtype, copy=True)
        if any(dim < 1 for dim in self.data.shape):
            raise DimensionError(f"Tensor dimensions must be positive, got {self.shape}")
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.node: Optional["Node"] = None
        self.name = name

    @classmethod
    def _wrap(cls, array: np.ndarray) -> "Tensor":
        """Build a tensor around an op result without copying it."""
        tensor = cls.__new__(cls)
        tensor.data = array
        tensor.requires_grad = False
        tensor.grad = None
        tensor.node = None
        tensor.name = None
        return tensor

    @property
    def shape(self) -> tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def size(self) -> int:
        return self.data.size

    @property
    def dtype(self) -> np.dtype:
        return self.data.dtype

    @property
    def is_leaf(self) -> bool:
        return self.node is None

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        if self.data.size != 1:
            raise ContractError(f"item() needs a single-element tensor, got {self.shape}")
        return float(self.data.reshape(-1)[0])

    def detach(self) -> "Tensor":
        return Tensor(self.data)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.data)

    def __repr__(self) -> str:
        label = f", name={self.name!r}" if self.name else ""
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad}{label})"

    def __len__(self) -> int:
        return self.shape[0]

    # Operator sugar; the implementations live in src.autodiff.functions.

    def __add__(self, other):
        from src.autodiff import functions as F

        return F.add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        from src.autodiff import functions as F

        return F.sub(self, other)

    def __rsub__(self, other):
        from src.autodiff import functions as F

        return F.sub(other, self)

    def __mul__(self, other):
        from src.autodiff import functions as F

        if isinstance(other, (int, float)):
            return F.scale(self, float(other))
        return F.mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        from src.autodiff import functions as F

        return F.scale(self, -1.0)

    def __truediv__(self, other):
        from src.autodiff import functions as F

        if not isinstance(other, (int, float)):
            raise ContractError("Only division by a Python scalar is supported")
        return F.scale(self, 1.0 / float(other))

    def __matmul__(self, other):
        from src.autodiff import functions as F

        return F.matmul(self, other)

    def __getitem__(self, key):
        from src.autodiff import functions as F

        return F.getitem(self, key)

    def relu(self):
        from src.autodiff import functions as F

        return F.relu(self)

    def log(self, floor: Optional[float] = None):
        from src.autodiff import functions as F

        return F.log(self, floor=floor)

    def exp(self):
        from src.autodiff import functions as F

        return F.exp(self)

    def sum(self, axis: Optional[int] = None):
        from src.autodiff import functions as F

        return F.sum(self, axis=axis)

    def mean(self, axis: Optional[int] = None):
        from src.autodiff import functions as F

        return F.mean(self, axis=axis)

    def reshape(self, *shape):
        from src.autodiff import functions as F

        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return F.reshape(self, shape)


def as_tensor(value: Union[Tensor, ArrayLike], dtype: Optional[np.dtype] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    return Tensor(value, dtype=dtype)


@dataclass
class Node:
    """One recorded op: its rule, inputs, output and saved forward values."""

    op: str
    function: Any
    inputs: tuple[Tensor, ...]
    output: Tensor
    ctx: Any


class GradientSet:
    """Gradients keyed by the leaf tensors they belong to."""

    def __init__(self, pairs: Iterable[tuple[Tensor, np.ndarray]] = ()):
        self._tensors: dict[int, Tensor] = {}
        self._grads: dict[int, np.ndarray] = {}
        for tensor, grad in pairs:
            self._tensors[id(tensor)] = tensor
            self._grads[id(tensor)] = grad

    def __getitem__(self, tensor: Tensor) -> np.ndarray:
        try:
            return self._grads[id(tensor)]
        except KeyError:
            raise KeyError(f"No gradient recorded for {tensor!r}") from None

    def __contains__(self, tensor: Tensor) -> bool:
        return id(tensor) in self._grads

    def __len__(self) -> int:
        return len(self._grads)

    def __iter__(self) -> Iterator[Tensor]:
        return iter(self._tensors.values())

    def items(self) -> Iterator[tuple[Tensor, np.ndarray]]:
        for key, tensor in self._tensors.items():
            yield tensor, self._grads[key]


_local = threading.local()


def _tape_stack() -> list["Tape"]:
    if not hasattr(_local, "stack"):
        _local.stack = []
    return _local.stack


def current_tape() -> Optional["Tape"]:
    """Return the innermost active tape of this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


@dataclass
class Tape:
    """Append-only record of differentiable ops executed while active."""

    nodes: list[Node] = field(default_factory=list)
    leaves: dict[int, Tensor] = field(default_factory=dict)

    def __enter__(self) -> "Tape":
        _tape_stack().append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        stack = _tape_stack()
        if not stack or stack[-1] is not self:
            raise ContractError("Tape contexts must be exited in LIFO order")
        stack.pop()

    def watch(self, *tensors: Tensor) -> None:
        """Register leaves so they receive a gradient even when unreachable."""
        for tensor in tensors:
            if not tensor.is_leaf:
                raise ContractError(f"Only leaf tensors can be watched, got {tensor!r}")
            tensor.requires_grad = True
            self.leaves[id(tensor)] = tensor

    def record(self, node: Node) -> None:
        for tensor in node.inputs:
            if tensor.requires_grad and tensor.is_leaf:
                self.leaves.setdefault(id(tensor), tensor)
        self.nodes.append(node)
        node.output.node = node
        node.output.requires_grad = True

    def backward(self, root: Tensor) -> GradientSet:
        """Differentiate a scalar root with respect to every registered leaf."""
        if root.size != 1 or root.ndim > 1:
            raise ContractError(
                f"backward() needs a scalar root, got shape {root.shape}"
            )
        return self.vjp(root, np.ones_like(root.data))

    def vjp(self, output: Tensor, cotangent: np.ndarray) -> GradientSet:
        """Vector-Jacobian product of ``output`` against ``cotangent``."""
        cotangent = np.asarray(cotangent, dtype=output.dtype)
        if cotangent.shape != output.shape:
            raise DimensionError(
                f"Cotangent shape {cotangent.shape} does not match output {output.shape}"
            )
        for leaf in self.leaves.values():
            leaf.zero_grad()

        pending: dict[int, np.ndarray] = {}
        if output.requires_grad:
            pending[id(output)] = cotangent

        for node in reversed(self.nodes):
            grad = pending.pop(id(node.output), None)
            if grad is None:
                continue
            input_grads = node.function.backward(node.ctx, grad)
            for tensor, input_grad in zip(node.inputs, input_grads):
                if input_grad is None or not tensor.requires_grad:
                    continue
                input_grad = np.asarray(input_grad)
                if input_grad.shape != tensor.shape:
                    raise DimensionError(
                        f"Backward rule of {node.op} produced {input_grad.shape} "
                        f"for an input of shape {tensor.shape}"
                    )
                key = id(tensor)
                if key in pending:
                    pending[key] = pending[key] + input_grad
                else:
                    pending[key] = input_grad

        pairs = []
        for key, leaf in self.leaves.items():
            grad = pending.get(key)
            if grad is not None:
                leaf.grad = leaf.grad + grad
            pairs.append((leaf, leaf.grad))
        logger.debug(f"Backward pass over {len(self.nodes)} nodes, {len(pairs)} leaves")
        return GradientSet(pairs)


def backward(tape: Tape, root: Tensor) -> GradientSet:
    """Module-level alias of ``Tape.backward``."""
    return tape.backward(root)
