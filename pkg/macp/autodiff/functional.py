"""Elementary differentiable operations shared by every other module."""

from typing import Sequence

import numpy as np

from macp.autodiff.tensor import Tensor, apply_op
from macp.errors import ShapeMismatchError


def _as_tensor(x) -> Tensor:
    return x if isinstance(x, Tensor) else Tensor(x)


def add(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise sum of two same-shaped tensors."""
    if a.shape != b.shape:
        raise ShapeMismatchError(f"add: shapes {a.shape} and {b.shape} differ")
    return apply_op("add", a.value + b.value, (a, b), lambda g: (g, g))


def add_n(tensors: Sequence[Tensor]) -> Tensor:
    """Sum of a non-empty list of same-shaped tensors, left to right."""
    out = tensors[0]
    for t in tensors[1:]:
        out = add(out, t)
    return out


def mul(a: Tensor, b: Tensor) -> Tensor:
    """Elementwise product of two same-shaped tensors."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeMismatchError(f"mul: shapes {a.shape} and {b.shape} differ")
    av, bv = a.value, b.value
    return apply_op("mul", av * bv, (a, b), lambda g: (g * bv, g * av))


def scale(a: Tensor, factor: float) -> Tensor:
    """Multiply by a Python scalar."""
    return apply_op("scale", a.value * factor, (a,), lambda g: (g * factor,))


def total(a: Tensor) -> Tensor:
    """Sum of all elements as a 0-d tensor."""
    shape = a.shape
    return apply_op("total", np.array(a.value.sum()), (a,),
                    lambda g: (np.broadcast_to(g, shape).copy(),))


def mean(a: Tensor) -> Tensor:
    """Mean of all elements as a 0-d tensor."""
    shape, n = a.shape, max(a.size, 1)
    return apply_op("mean", np.array(a.value.sum() / n), (a,),
                    lambda g: (np.broadcast_to(g / n, shape).copy(),))


def concat_channels(a: Tensor, b: Tensor) -> Tensor:
    """Concatenate along the last axis."""
    if a.shape[:-1] != b.shape[:-1]:
        raise ShapeMismatchError(f"concat: leading shapes {a.shape} and {b.shape} differ")
    ca = a.shape[-1]
    return apply_op("concat_channels", np.concatenate([a.value, b.value], axis=-1), (a, b),
                    lambda g: (g[..., :ca], g[..., ca:]))


def scatter_rows(x: Tensor, flat_index: np.ndarray, n_rows: int) -> Tensor:
    """
    Place the rows of ``x`` (N, C) at ``flat_index`` of a zero (n_rows, C) array.

    Indices must be unique.
    """
    channels = x.shape[1]
    out = np.zeros((n_rows, channels))
    out[flat_index] = x.value
    return apply_op("scatter_rows", out, (x,), lambda g: (g[flat_index],))


def gather_rows(x: Tensor, index: np.ndarray, valid: np.ndarray) -> Tensor:
    """
    Row gather with zero fill: ``out[i] = x[index[i]]`` where ``valid[i]``.

    Source rows may be gathered more than once; their adjoints accumulate.
    """
    n_src = x.shape[0]
    src = index[valid]
    out = np.zeros((index.shape[0],) + x.shape[1:])
    out[valid] = x.value[src]

    def vjp(g):
        grad = np.zeros((n_src,) + g.shape[1:])
        np.add.at(grad, src, g[valid])
        return (grad,)

    return apply_op("gather_rows", out, (x,), vjp)


def reshape(a: Tensor, shape) -> Tensor:
    old = a.shape
    return apply_op("reshape", a.value.reshape(shape), (a,), lambda g: (g.reshape(old),))
