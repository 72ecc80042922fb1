# Copyright (c) 2025 dap-pool authors
# SPDX-License-Identifier: MIT

"""
Differentiable operations.

Each op is a ``Function`` subclass with a pure-numpy ``forward`` and a
``backward`` rule returning one gradient (or ``None``) per input. Ops are
registered by name in ``OPS`` so that gradient checks and the verification
suite can address them individually.
"""

import logging
from typing import Callable, ClassVar, Optional, Sequence, Union

import numpy as np

from src.autodiff.tensor import (
    Node,
    Tensor,
    as_tensor,
    current_tape,
    debug_enabled,
)
from src.errors import ContractError, DimensionError, DomainError, NumericError

logger = logging.getLogger(__name__)

Operand = Union[Tensor, np.ndarray, float, int]


class Context:
    """Scratch space a forward pass leaves for its backward rule."""

    def __init__(self):
        self.saved: tuple = ()

    def save_for_backward(self, *values) -> None:
        self.saved = values


OPS: dict[str, type["Function"]] = {}


def register_op(name: str) -> Callable[[type], type]:
    def decorator(cls: type) -> type:
        cls.name = name
        OPS[name] = cls
        return cls

    return decorator


class Function:
    """Base class for differentiable operations."""

    name: ClassVar[str] = "function"

    @staticmethod
    def forward(ctx: Context, *arrays: np.ndarray, **kwargs) -> np.ndarray:
        raise NotImplementedError("Subclass must implement forward()")

    @staticmethod
    def backward(ctx: Context, grad: np.ndarray) -> tuple[Optional[np.ndarray], ...]:
        raise NotImplementedError("Subclass must implement backward()")

    @classmethod
    def apply(cls, *inputs: Operand, **kwargs) -> Tensor:
        tensors = tuple(as_tensor(value) for value in inputs)
        ctx = Context()
        result = np.asarray(
            cls.forward(ctx, *(tensor.data for tensor in tensors), **kwargs)
        )
        if debug_enabled():
            _assert_finite(cls.name, tensors, result)
        output = Tensor._wrap(result)
        tape = current_tape()
        if tape is not None and any(tensor.requires_grad for tensor in tensors):
            tape.record(
                Node(op=cls.name, function=cls, inputs=tensors, output=output, ctx=ctx)
            )
        return output


def _assert_finite(op: str, inputs: Sequence[Tensor], result: np.ndarray) -> None:
    if all(np.all(np.isfinite(t.data)) for t in inputs) and not np.all(
        np.isfinite(result)
    ):
        raise NumericError(f"Op {op} produced non-finite values from finite inputs")


def _coerce_pair(a: Operand, b: Operand) -> tuple[Tensor, Tensor]:
    """Turn Python scalars into 0-d tensors of the other operand's dtype."""
    if isinstance(a, Tensor) and not isinstance(b, Tensor):
        b = Tensor(b, dtype=a.dtype)
    elif isinstance(b, Tensor) and not isinstance(a, Tensor):
        a = Tensor(a, dtype=b.dtype)
    return as_tensor(a), as_tensor(b)


def _check_broadcast(op: str, a: np.ndarray, b: np.ndarray) -> None:
    if a.shape == b.shape or a.ndim == 0 or b.ndim == 0:
        return
    raise DimensionError(
        f"{op}: shapes {a.shape} and {b.shape} are not broadcast-compatible "
        "(only equal shapes or scalar operands are supported)"
    )


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    return np.asarray(grad.sum(), dtype=grad.dtype).reshape(shape)


@register_op("add")
class Add(Function):
    @staticmethod
    def forward(ctx, a, b):
        _check_broadcast("add", a, b)
        ctx.save_for_backward(a.shape, b.shape)
        return a + b

    @staticmethod
    def backward(ctx, grad):
        a_shape, b_shape = ctx.saved
        return _unbroadcast(grad, a_shape), _unbroadcast(grad, b_shape)


@register_op("sub")
class Sub(Function):
    @staticmethod
    def forward(ctx, a, b):
        _check_broadcast("sub", a, b)
        ctx.save_for_backward(a.shape, b.shape)
        return a - b

    @staticmethod
    def backward(ctx, grad):
        a_shape, b_shape = ctx.saved
        return _unbroadcast(grad, a_shape), _unbroadcast(-grad, b_shape)


@register_op("mul")
class Mul(Function):
    @staticmethod
    def forward(ctx, a, b):
        _check_broadcast("mul", a, b)
        ctx.save_for_backward(a, b)
        return a * b

    @staticmethod
    def backward(ctx, grad):
        a, b = ctx.saved
        return _unbroadcast(grad * b, a.shape), _unbroadcast(grad * a, b.shape)


@register_op("scale")
class Scale(Function):
    @staticmethod
    def forward(ctx, a, factor: float = 1.0):
        ctx.factor = factor
        return a * a.dtype.type(factor)

    @staticmethod
    def backward(ctx, grad):
        return (grad * grad.dtype.type(ctx.factor),)


@register_op("relu")
class Relu(Function):
    @staticmethod
    def forward(ctx, a):
        mask = a > 0
        ctx.save_for_backward(mask)
        return np.where(mask, a, a.dtype.type(0))

    @staticmethod
    def backward(ctx, grad):
        (mask,) = ctx.saved
        # Subgradient 0 at exactly 0.
        return (np.where(mask, grad, grad.dtype.type(0)),)


@register_op("log")
class Log(Function):
    @staticmethod
    def forward(ctx, a, floor: Optional[float] = None):
        if floor is None:
            if np.any(a <= 0):
                raise DomainError(
                    f"log of non-positive value (min={a.min()!r}); pass a floor"
                )
            clamped = a
            mask = None
        else:
            if floor <= 0:
                raise DomainError(f"log floor must be positive, got {floor}")
            clamped = np.maximum(a, a.dtype.type(floor))
            mask = a >= floor
        ctx.save_for_backward(clamped, mask)
        return np.log(clamped)

    @staticmethod
    def backward(ctx, grad):
        clamped, mask = ctx.saved
        result = grad / clamped
        if mask is not None:
            result = np.where(mask, result, result.dtype.type(0))
        return (result,)


@register_op("exp")
class Exp(Function):
    @staticmethod
    def forward(ctx, a):
        out = np.exp(a)
        ctx.save_for_backward(out)
        return out

    @staticmethod
    def backward(ctx, grad):
        (out,) = ctx.saved
        return (grad * out,)


@register_op("matmul")
class MatMul(Function):
    @staticmethod
    def forward(ctx, a, b):
        if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
            raise DimensionError(
                f"matmul: cannot multiply {a.shape} by {b.shape}"
            )
        ctx.save_for_backward(a, b)
        return a @ b

    @staticmethod
    def backward(ctx, grad):
        a, b = ctx.saved
        return grad @ b.T, a.T @ grad


@register_op("sum")
class Sum(Function):
    @staticmethod
    def forward(ctx, a, axis: Optional[int] = None):
        ctx.save_for_backward(a.shape, axis)
        return np.asarray(a.sum(axis=axis), dtype=a.dtype)

    @staticmethod
    def backward(ctx, grad):
        shape, axis = ctx.saved
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad, shape).copy(),)


@register_op("mean")
class Mean(Function):
    @staticmethod
    def forward(ctx, a, axis: Optional[int] = None):
        count = a.size if axis is None else a.shape[axis]
        ctx.save_for_backward(a.shape, axis, count)
        return np.asarray(a.sum(axis=axis) / count, dtype=a.dtype)

    @staticmethod
    def backward(ctx, grad):
        shape, axis, count = ctx.saved
        if axis is not None:
            grad = np.expand_dims(grad, axis)
        return (np.broadcast_to(grad / count, shape).copy(),)


@register_op("reshape")
class Reshape(Function):
    @staticmethod
    def forward(ctx, a, shape: tuple[int, ...] = ()):
        ctx.save_for_backward(a.shape)
        try:
            return a.reshape(shape)
        except ValueError as e:
            raise DimensionError(f"reshape: cannot view {a.shape} as {shape}") from e

    @staticmethod
    def backward(ctx, grad):
        (shape,) = ctx.saved
        return (grad.reshape(shape),)


@register_op("getitem")
class GetItem(Function):
    @staticmethod
    def forward(ctx, a, key=None):
        parts = key if isinstance(key, tuple) else (key,)
        if not all(isinstance(p, (int, slice, np.integer)) for p in parts):
            raise ContractError("getitem supports basic int/slice indexing only")
        ctx.save_for_backward(a.shape, a.dtype, key)
        return np.array(a[key], copy=True)

    @staticmethod
    def backward(ctx, grad):
        shape, dtype, key = ctx.saved
        result = np.zeros(shape, dtype=dtype)
        result[key] = grad
        return (result,)


@register_op("softmax")
class Softmax(Function):
    @staticmethod
    def forward(ctx, a):
        if a.ndim != 2:
            raise DimensionError(f"softmax expects [batch x classes], got {a.shape}")
        shifted = a - a.max(axis=1, keepdims=True)
        exps = np.exp(shifted)
        probs = exps / exps.sum(axis=1, keepdims=True)
        ctx.save_for_backward(probs)
        return probs

    @staticmethod
    def backward(ctx, grad):
        (probs,) = ctx.saved
        return (probs * (grad - (grad * probs).sum(axis=1, keepdims=True)),)


@register_op("pick")
class Pick(Function):
    """Select one column per row: ``out[b] = a[b, index[b]]``."""

    @staticmethod
    def forward(ctx, a, index: Optional[np.ndarray] = None):
        index = np.asarray(index, dtype=np.int64)
        if a.ndim != 2 or index.shape != (a.shape[0],):
            raise DimensionError(
                f"pick: index of shape {index.shape} does not fit {a.shape}"
            )
        rows = np.arange(a.shape[0])
        ctx.save_for_backward(a.shape, a.dtype, rows, index)
        return a[rows, index]

    @staticmethod
    def backward(ctx, grad):
        shape, dtype, rows, index = ctx.saved
        result = np.zeros(shape, dtype=dtype)
        result[rows, index] = grad
        return (result,)


@register_op("concat")
class Concat(Function):
    @staticmethod
    def forward(ctx, *arrays, axis: int = 1):
        ref = arrays[0].shape
        for arr in arrays[1:]:
            if arr.ndim != len(ref) or any(
                d1 != d2 for i, (d1, d2) in enumerate(zip(arr.shape, ref)) if i != axis
            ):
                raise DimensionError(
                    f"concat: shapes {ref} and {arr.shape} differ off axis {axis}"
                )
        bounds = np.cumsum([arr.shape[axis] for arr in arrays])[:-1]
        ctx.save_for_backward(bounds, axis)
        return np.concatenate(arrays, axis=axis)

    @staticmethod
    def backward(ctx, grad):
        bounds, axis = ctx.saved
        return tuple(np.split(grad, bounds, axis=axis))


@register_op("add_bias")
class AddBias(Function):
    """Add a per-channel vector along axis 1 of a 2-D or 4-D tensor."""

    @staticmethod
    def forward(ctx, x, b):
        if b.ndim != 1 or x.ndim < 2 or x.shape[1] != b.shape[0]:
            raise DimensionError(f"add_bias: bias {b.shape} does not fit {x.shape}")
        view = b.reshape((1, -1) + (1,) * (x.ndim - 2))
        ctx.save_for_backward(tuple(i for i in range(x.ndim) if i != 1))
        return x + view

    @staticmethod
    def backward(ctx, grad):
        (axes,) = ctx.saved
        return grad, grad.sum(axis=axes)


def add(a: Operand, b: Operand) -> Tensor:
    return Add.apply(*_coerce_pair(a, b))


def sub(a: Operand, b: Operand) -> Tensor:
    return Sub.apply(*_coerce_pair(a, b))


def mul(a: Operand, b: Operand) -> Tensor:
    return Mul.apply(*_coerce_pair(a, b))


def scale(a: Operand, factor: float) -> Tensor:
    return Scale.apply(a, factor=float(factor))


def relu(a: Operand) -> Tensor:
    return Relu.apply(a)


def log(a: Operand, floor: Optional[float] = None) -> Tensor:
    return Log.apply(a, floor=floor)


def exp(a: Operand) -> Tensor:
    return Exp.apply(a)


def matmul(a: Operand, b: Operand) -> Tensor:
    return MatMul.apply(a, b)


def sum(a: Operand, axis: Optional[int] = None) -> Tensor:  # noqa: A001
    return Sum.apply(a, axis=axis)


def mean(a: Operand, axis: Optional[int] = None) -> Tensor:
    return Mean.apply(a, axis=axis)


def reshape(a: Operand, shape: Sequence[int]) -> Tensor:
    return Reshape.apply(a, shape=tuple(shape))


def getitem(a: Operand, key) -> Tensor:
    return GetItem.apply(a, key=key)


def softmax(logits: Operand) -> Tensor:
    return Softmax.apply(logits)


def pick(a: Operand, index: np.ndarray) -> Tensor:
    return Pick.apply(a, index=index)


def concat(tensors: Sequence[Operand], axis: int = 1) -> Tensor:
    return Concat.apply(*tensors, axis=axis)


def add_bias(x: Operand, bias: Operand) -> Tensor:
    return AddBias.apply(x, bias)


_ELEMENTWISE: dict[str, Callable[..., Tensor]] = {
    "add": add,
    "sub": sub,
    "mul": mul,
    "relu": relu,
    "log": log,
    "exp": exp,
    "scale": scale,
}


def elementwise(op: str, *args, **kwargs) -> Tensor:
    """Dispatch one of the elementwise ops by name."""
    try:
        fn = _ELEMENTWISE[op]
    except KeyError:
        raise ContractError(
            f"Unknown elementwise op {op!r}; expected one of {sorted(_ELEMENTWISE)}"
        ) from None
    return fn(*args, **kwargs)
