"""Scale-shift, residual add and per-channel normalization."""

import numpy as np

from macp.autodiff import Param, Tensor, apply_op
from macp.autodiff.functional import add
from macp.errors import ShapeMismatchError
from macp.geom.voxel import DenseGrid, SparseTensor
from macp.nnops.containers import Features, features_of, rewrap

NORM_EPS = 1e-5


def _check_vector(op: str, vec: Tensor, channels: int) -> None:
    if vec.shape != (channels,):
        raise ShapeMismatchError(f"{op}: expected a vector of length {channels}, got {vec.shape}")


def scale_shift(x: Features, gamma: Tensor, beta: Tensor) -> Features:
    """out = gamma * x + beta per cell; no mixing across cells."""
    t = features_of(x)
    channels = t.shape[-1]
    _check_vector("scale_shift", gamma, channels)
    _check_vector("scale_shift", beta, channels)
    xv, gv = t.value, gamma.value
    out = xv * gv + beta.value

    def vjp(g):
        g2 = g.reshape(-1, channels)
        return g * gv, (g2 * xv.reshape(-1, channels)).sum(axis=0), g2.sum(axis=0)

    return rewrap(x, apply_op("scale_shift", out, (t, gamma, beta), vjp))


def residual_add(a: Features, b: Features) -> Features:
    """Elementwise sum of two containers with identical shapes and sites."""
    if isinstance(a, SparseTensor) and isinstance(b, SparseTensor) and not a.same_sites(b):
        raise ShapeMismatchError("residual_add: sparse operands have different coordinate sets")
    ta, tb = features_of(a), features_of(b)
    if ta.shape != tb.shape:
        raise ShapeMismatchError(f"residual_add: shapes {ta.shape} and {tb.shape} differ")
    return rewrap(a, add(ta, tb))


def channel_norm(grid: DenseGrid, gamma: Param, beta: Param, eps: float = NORM_EPS) -> DenseGrid:
    """
    Instance-style normalization: each channel is standardized over all
    spatial cells, then scaled by gamma and shifted by beta.
    """
    x = grid.values
    channels = grid.channels
    _check_vector("channel_norm", gamma, channels)
    _check_vector("channel_norm", beta, channels)
    flat = x.value.reshape(-1, channels)
    n = flat.shape[0]
    mu = flat.mean(axis=0)
    var = flat.var(axis=0)
    inv_std = 1.0 / np.sqrt(var + eps)
    xhat = (flat - mu) * inv_std
    out = (xhat * gamma.value + beta.value).reshape(x.shape)
    gv = gamma.value

    def vjp(g):
        g2 = g.reshape(-1, channels)
        gxhat = g2 * gv
        gx = inv_std / n * (n * gxhat - gxhat.sum(axis=0) - xhat * (gxhat * xhat).sum(axis=0))
        return gx.reshape(x.shape), (g2 * xhat).sum(axis=0), g2.sum(axis=0)

    return DenseGrid(apply_op("channel_norm", out, (x, gamma, beta), vjp), dict(grid.meta))
