"""
Convolution kernels and the three convolution primitives.

Kernel weights are laid out (k, k, C_in, C_out) and applied as a
cross-correlation: slice [a, b] multiplies the neighbour at
(i + a - r, j + b - r) of output cell (i, j), r = k // 2. The sparse and
dense convolutions share this convention, so on a fully occupied grid they
agree to rounding.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from macp.autodiff import Param, apply_op
from macp.errors import ContractError, ShapeMismatchError
from macp.geom.voxel import DenseGrid, SparseTensor
from macp.nnops.containers import Features, features_of, rewrap

logger = logging.getLogger(__name__)


@dataclass
class ConvKernel:
    """k x k kernel with a per-output-channel bias."""
    weight: Param
    bias: Param

    def __post_init__(self):
        shape = self.weight.shape
        if len(shape) != 4 or shape[0] != shape[1] or shape[0] % 2 == 0:
            raise ContractError(f"kernel weight must be (k, k, C, C') with odd k, got {shape}")
        if self.bias.shape != (shape[3],):
            raise ShapeMismatchError(f"bias shape {self.bias.shape} for {shape[3]} out channels")
        if not np.all(np.isfinite(self.weight.value)):
            raise ContractError(f"kernel {self.weight.name} has non-finite weights")

    @classmethod
    def create(cls, name: str, k: int, c_in: int, c_out: int,
               rng: np.random.RandomState, zero: bool = False) -> "ConvKernel":
        """
        Build a kernel named ``name``.weight / ``name``.bias.

        Weights are uniform in +-1/sqrt(k*k*C_in) unless ``zero``; biases start at 0.
        """
        if zero:
            weight = np.zeros((k, k, c_in, c_out))
        else:
            bound = 1.0 / np.sqrt(k * k * c_in)
            weight = rng.uniform(-bound, bound, size=(k, k, c_in, c_out))
        return cls(Param(f"{name}.weight", weight), Param(f"{name}.bias", np.zeros(c_out)))

    @property
    def k(self) -> int:
        return self.weight.shape[0]

    @property
    def in_channels(self) -> int:
        return self.weight.shape[2]

    @property
    def out_channels(self) -> int:
        return self.weight.shape[3]

    def params(self):
        return [self.weight, self.bias]


def _check_channels(op: str, channels: int, kernel: ConvKernel) -> None:
    if channels != kernel.in_channels:
        raise ShapeMismatchError(
            f"{op}: input has {channels} channels, kernel {kernel.weight.name} expects {kernel.in_channels}")


def subm_conv(st: SparseTensor, kernel: ConvKernel) -> SparseTensor:
    """
    Submanifold sparse convolution: outputs exist only at occupied sites.

    Each output is the bias plus the sum, over kernel offsets whose
    neighbour is occupied, of neighbour features times that weight slice.
    """
    _check_channels("subm_conv", st.channels, kernel)
    x, w, b = st.feats, kernel.weight, kernel.bias
    rules = st.rules(kernel.k)
    out = np.broadcast_to(b.value, (len(st), kernel.out_channels)).copy()
    for rule in rules:
        out[rule.outputs] += x.value[rule.inputs] @ w.value[rule.a, rule.b]

    xv, wv = x.value, w.value

    def vjp(g):
        gx = np.zeros_like(xv)
        gw = np.zeros_like(wv)
        for rule in rules:
            g_out = g[rule.outputs]
            gw[rule.a, rule.b] += xv[rule.inputs].T @ g_out
            gx[rule.inputs] += g_out @ wv[rule.a, rule.b].T
        return gx, gw, g.sum(axis=0)

    return st.with_feats(apply_op("subm_conv", out, (x, w, b), vjp))


def pointwise_conv(x: Features, kernel: ConvKernel) -> Features:
    """1 x 1 convolution: per-site affine map feats @ W + b."""
    if kernel.k != 1:
        raise ContractError(f"pointwise_conv needs k == 1, kernel {kernel.weight.name} has k={kernel.k}")
    feats = features_of(x)
    _check_channels("pointwise_conv", feats.shape[-1], kernel)
    w, b = kernel.weight, kernel.bias
    fv, wm = feats.value, w.value[0, 0]
    out = fv @ wm + b.value

    def vjp(g):
        g2 = g.reshape(-1, g.shape[-1])
        gw = (fv.reshape(-1, fv.shape[-1]).T @ g2).reshape(w.shape)
        return g @ wm.T, gw, g2.sum(axis=0)

    return rewrap(x, apply_op("pointwise_conv", out, (feats, w, b), vjp))


def dense_conv2d(grid: DenseGrid, kernel: ConvKernel) -> DenseGrid:
    """Stride-1, zero-padded, same-size 2D convolution on an H x W x C grid."""
    _check_channels("dense_conv2d", grid.channels, kernel)
    x, w, b = grid.values, kernel.weight, kernel.bias
    height, width, c_in = grid.shape
    k, r = kernel.k, kernel.k // 2
    padded = np.pad(x.value, ((r, r), (r, r), (0, 0)))
    # (H, W, C, k, k) -> (H*W, k*k*C) with the C axis fastest
    windows = sliding_window_view(padded, (k, k), axis=(0, 1))
    cols = windows.transpose(0, 1, 3, 4, 2).reshape(height * width, k * k * c_in)
    wm = w.value.reshape(k * k * c_in, kernel.out_channels)
    out = (cols @ wm + b.value).reshape(height, width, kernel.out_channels)

    def vjp(g):
        g2 = g.reshape(height * width, -1)
        gw = (cols.T @ g2).reshape(w.shape)
        gcols = (g2 @ wm.T).reshape(height, width, k, k, c_in)
        gpad = np.zeros_like(padded)
        for a in range(k):
            for bb in range(k):
                gpad[a:a + height, bb:bb + width] += gcols[:, :, a, bb]
        return gpad[r:r + height, r:r + width], gw, g2.sum(axis=0)

    return DenseGrid(apply_op("dense_conv2d", out, (x, w, b), vjp), dict(grid.meta))
