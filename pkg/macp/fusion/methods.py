"""
Intermediate-fusion methods and the corrective block that follows them.

With no partner maps every method returns the ego map unchanged (concat
relies on its reducer starting at [I; 0]), so a cooperative model without
partners behaves exactly like the single-agent model.
"""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np

from macp.autodiff import Param, Tensor
from macp.autodiff.functional import add, add_n, concat_channels, scale
from macp.errors import ConfigError, ShapeMismatchError
from macp.geom.voxel import DenseGrid
from macp.nnops import ConvKernel, channel_norm, dense_conv2d, gelu, pointwise_conv


class FusionMethod(Enum):
    WEIGHTED_SUM = "weighted_sum"
    MEAN = "mean"
    SUM = "sum"
    CONCAT = "concat"

    @classmethod
    def parse(cls, value) -> "FusionMethod":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ConfigError(f"unknown fusion method '{value}' (expected one of {names})") from None


@dataclass
class FusionBlock:
    """3x3 conv + channel norm after fusion, and the optional concat reducer."""
    conv: ConvKernel
    gamma: Param
    beta: Param
    reducer: Optional[ConvKernel] = None

    @classmethod
    def create(cls, channels: int, rng: np.random.RandomState, concat: bool = False) -> "FusionBlock":
        block = cls(
            ConvKernel.create("fusion.conv", 3, channels, channels, rng),
            Param("fusion.norm.gamma", np.ones(channels)),
            Param("fusion.norm.beta", np.zeros(channels)),
        )
        if concat:
            block.reducer = make_concat_reducer(channels)
        return block

    def params(self) -> List[Param]:
        params = self.conv.params() + [self.gamma, self.beta]
        if self.reducer is not None:
            params += self.reducer.params()
        return params


def make_concat_reducer(channels: int) -> ConvKernel:
    """1x1 conv 2C -> C initialized to [I; 0], so it passes the ego half through."""
    weight = np.zeros((1, 1, 2 * channels, channels))
    weight[0, 0, :channels, :] = np.eye(channels)
    return ConvKernel(Param("fusion.reduce.weight", weight), Param("fusion.reduce.bias", np.zeros(channels)))


def _mean(maps: Sequence[Tensor]) -> Tensor:
    return scale(add_n(list(maps)), 1.0 / len(maps))


def fuse_maps(ego: DenseGrid, others: Sequence[DenseGrid], method="weighted_sum",
              reducer: Optional[ConvKernel] = None) -> DenseGrid:
    """
    Combine aligned maps.

    weighted_sum: ego + (1/N) sum(others); mean: average of all N+1 maps;
    sum: sum of all maps; concat: [ego || mean(others)] reduced back to C
    channels by ``reducer`` (zeros stand in for a missing partner).
    """
    method = FusionMethod.parse(method)
    for other in others:
        if other.shape != ego.shape:
            raise ShapeMismatchError(f"fuse_maps: partner map {other.shape} vs ego {ego.shape}")
    tensors = [o.values for o in others]

    if method is FusionMethod.CONCAT:
        if reducer is None:
            raise ConfigError("concat fusion needs a reducer kernel")
        partner = _mean(tensors) if tensors else Tensor(np.zeros(ego.shape))
        stacked = DenseGrid(concat_channels(ego.values, partner), dict(ego.meta))
        return pointwise_conv(stacked, reducer)
    if not tensors:
        return ego
    if method is FusionMethod.WEIGHTED_SUM:
        fused = add(ego.values, _mean(tensors))
    elif method is FusionMethod.MEAN:
        fused = _mean([ego.values] + tensors)
    else:
        fused = add_n([ego.values] + tensors)
    return DenseGrid(fused, dict(ego.meta))


def post_fusion_conv(grid: DenseGrid, model) -> DenseGrid:
    """3x3 conv, channel norm, GELU. ``model`` is a FusionBlock or carries one as ``.fusion``."""
    block = getattr(model, "fusion", model)
    return gelu(channel_norm(dense_conv2d(grid, block.conv), block.gamma, block.beta))
