"""Differentiable operations on `Tensor`.

Every op computes its value with numpy, then registers a closure mapping the
output gradient to one gradient per input.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from seqmine.autograd.tensor import Tensor, as_tensor, record_op
from seqmine.errors import BoundsError, DomainError, ShapeError


def _trailing_compatible(big: tuple[int, ...], small: tuple[int, ...]) -> bool:
    if len(small) > len(big):
        return False
    return len(small) == 0 or big[len(big) - len(small) :] == small


def _unbroadcast(grad: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    lead = grad.ndim - len(shape)
    return grad.sum(axis=tuple(range(lead))).reshape(shape)


def _binary_shapes(op: str, a: Tensor, b: Tensor) -> None:
    if a.shape == b.shape:
        return
    if _trailing_compatible(a.shape, b.shape) or _trailing_compatible(b.shape, a.shape):
        return
    raise ShapeError(f"{op}: operand shapes differ", a.shape, b.shape)


def matmul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2 or a.shape[1] != b.shape[0]:
        raise ShapeError("matmul: inner dimensions disagree", a.shape, b.shape)

    a_data, b_data = a.data, b.data

    def backward(g):
        return g @ b_data.T, a_data.T @ g

    return record_op("matmul", a_data @ b_data, (a, b), backward)


def add(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes("add", a, b)
    a_shape, b_shape = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, a_shape), _unbroadcast(g, b_shape)

    return record_op("add", a.data + b.data, (a, b), backward)


def sub(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes("sub", a, b)
    a_shape, b_shape = a.shape, b.shape

    def backward(g):
        return _unbroadcast(g, a_shape), -_unbroadcast(g, b_shape)

    return record_op("sub", a.data - b.data, (a, b), backward)


def mul(a: Tensor, b: Tensor) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    _binary_shapes("mul", a, b)
    a_data, b_data = a.data, b.data

    def backward(g):
        return _unbroadcast(g * b_data, a_data.shape), _unbroadcast(g * a_data, b_data.shape)

    return record_op("mul", a_data * b_data, (a, b), backward)


def scale(a: Tensor, k: float) -> Tensor:
    a = as_tensor(a)
    k = float(k)
    return record_op("scale", a.data * k, (a,), lambda g: (g * k,))


def tanh(a: Tensor) -> Tensor:
    a = as_tensor(a)
    y = np.tanh(a.data)
    return record_op("tanh", y, (a,), lambda g: (g * (1.0 - y * y),))


def sigmoid(a: Tensor) -> Tensor:
    a = as_tensor(a)
    x = a.data
    z = np.exp(-np.abs(x))
    y = np.where(x >= 0, 1.0 / (1.0 + z), z / (1.0 + z))
    return record_op("sigmoid", y, (a,), lambda g: (g * y * (1.0 - y),))


def exp(a: Tensor) -> Tensor:
    a = as_tensor(a)
    with np.errstate(over="ignore"):
        y = np.exp(a.data)
    return record_op("exp", y, (a,), lambda g: (g * y,))


def log(a: Tensor) -> Tensor:
    a = as_tensor(a)
    x = a.data
    if (x <= 0).any():
        raise DomainError(f"log needs strictly positive inputs, min is {x.min()!r}")
    return record_op("log", np.log(x), (a,), lambda g: (g / x,))


_UNARY = {"tanh": tanh, "sigmoid": sigmoid, "exp": exp, "log": log}
_BINARY = {"add": add, "sub": sub, "mul": mul}


def elementwise(op: str, *operands) -> Tensor:
    if op in _UNARY:
        if len(operands) != 1:
            raise ValueError(f"{op} takes one operand, got {len(operands)}")
        return _UNARY[op](operands[0])

    if op in _BINARY:
        if len(operands) != 2:
            raise ValueError(f"{op} takes two operands, got {len(operands)}")
        return _BINARY[op](*operands)

    raise ValueError(f"Unknown elementwise op: {op}")


def clamp_min(a: Tensor, floor: float) -> Tensor:
    a = as_tensor(a)
    x = a.data
    mask = x > floor
    return record_op("clamp_min", np.maximum(x, floor), (a,), lambda g: (g * mask,))


def transpose(a: Tensor) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError("transpose needs a matrix", a.shape)
    return record_op("transpose", a.data.T.copy(), (a,), lambda g: (g.T,))


def reshape(a: Tensor, shape: Sequence[int]) -> Tensor:
    a = as_tensor(a)
    original = a.shape
    try:
        y = a.data.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeError("reshape: incompatible size", original, tuple(shape)) from e
    return record_op("reshape", y, (a,), lambda g: (g.reshape(original),))


def index(a: Tensor, key) -> Tensor:
    a = as_tensor(a)
    shape = a.shape
    try:
        y = np.array(a.data[key])
    except IndexError as e:
        raise BoundsError(f"index {key!r} out of range for shape {shape}") from e

    basic = _is_basic_index(key)

    def backward(g):
        full = np.zeros(shape, dtype=np.float64)
        if basic:
            full[key] = g
        else:
            # fancy indices may repeat
            np.add.at(full, key, g)
        return (full,)

    return record_op("index", y, (a,), backward)


def _is_basic_index(key) -> bool:
    parts = key if isinstance(key, tuple) else (key,)
    return all(
        isinstance(p, (int, np.integer, slice)) or p is Ellipsis or p is None for p in parts
    )


def concat(tensors: Sequence[Tensor], axis: int = -1) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat of nothing")

    try:
        y = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        raise ShapeError("concat: shapes disagree", *(t.shape for t in tensors)) from e

    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return record_op("concat", y, tensors, backward)


def stack(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("stack of nothing")

    shapes = {t.shape for t in tensors}
    if len(shapes) != 1:
        raise ShapeError("stack: shapes disagree", *(t.shape for t in tensors))

    y = np.stack([t.data for t in tensors], axis=axis)

    def backward(g):
        return tuple(np.take(g, i, axis=axis) for i in range(len(tensors)))

    return record_op("stack", y, tensors, backward)


def sum(a: Tensor) -> Tensor:  # noqa: A001
    a = as_tensor(a)
    shape = a.shape
    return record_op(
        "sum", np.array(a.data.sum()), (a,), lambda g: (np.broadcast_to(g, shape).copy(),)
    )


def mean(a: Tensor) -> Tensor:
    a = as_tensor(a)
    shape, n = a.shape, a.size
    return record_op(
        "mean",
        np.array(a.data.sum() / n),
        (a,),
        lambda g: (np.broadcast_to(g / n, shape).copy(),),
    )


def softmax(a: Tensor) -> Tensor:
    """Softmax over the last axis, shifted by the row max."""

    a = as_tensor(a)
    shifted = a.data - a.data.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return record_op("softmax", y, (a,), backward)


def softmax_slice(e: Tensor, lo: int, hi: int) -> Tensor:
    """Stable softmax of `e[lo..hi]` (inclusive) for a 1-D tensor."""

    e = as_tensor(e)
    if e.ndim != 1:
        raise ShapeError("softmax_slice needs a 1-D tensor", e.shape)

    length = e.shape[0]
    if not (0 <= lo <= hi < length):
        raise BoundsError(f"slice [{lo}, {hi}] is empty or outside [0, {length - 1}]")

    window = e.data[lo : hi + 1]
    z = np.exp(window - window.max())
    y = z / z.sum()

    def backward(g):
        full = np.zeros(length, dtype=np.float64)
        full[lo : hi + 1] = y * (g - (g * y).sum())
        return (full,)

    return record_op("softmax_slice", y, (e,), backward)


def window_mask(length: int, half_width: int) -> np.ndarray:
    """Boolean [T, T] band: row t marks the clamped window around t."""

    if half_width < 0:
        raise DomainError(f"half width must be non-negative, got {half_width}")
    steps = np.arange(length)
    return np.abs(steps[:, None] - steps[None, :]) <= half_width


def windowed_softmax(e: Tensor, half_width: int) -> Tensor:
    """alpha_t = exp(e_t) / sum_{k in win(t)} exp(e_k) along the last axis.

    Each window is shifted by its own max before exponentiating. The weights
    are normalised per window, not over the whole sequence.
    """

    e = as_tensor(e)
    length = e.shape[-1]
    mask = window_mask(length, half_width)

    x = e.data
    # [..., T, T]: row t holds e restricted to win(t)
    banded = np.where(mask, x[..., None, :], -np.inf)
    peak = banded.max(axis=-1)
    weights = np.where(mask, np.exp(x[..., None, :] - peak[..., :, None]), 0.0)
    denom = weights.sum(axis=-1)
    alpha = np.exp(x - peak) / denom
    beta = weights / denom[..., :, None]

    def backward(g):
        ga = g * alpha
        return (ga - np.einsum("...t,...tj->...j", ga, beta),)

    return record_op("windowed_softmax", alpha, (e,), backward)


def weighted_sum(alpha: Tensor, values: Tensor) -> Tensor:
    """sum_t alpha[..., t] * values[..., t, :]."""

    alpha, values = as_tensor(alpha), as_tensor(values)
    if values.ndim != alpha.ndim + 1 or values.shape[:-1] != alpha.shape:
        raise ShapeError("weighted_sum: weights and rows disagree", alpha.shape, values.shape)

    a, v = alpha.data, values.data

    def backward(g):
        return (
            np.einsum("...n,...tn->...t", g, v),
            a[..., :, None] * g[..., None, :],
        )

    return record_op("weighted_sum", np.einsum("...t,...tn->...n", a, v), (alpha, values), backward)
