"""Uniform access to the feature tensor of sparse and dense containers."""

from typing import Union

from macp.autodiff import Tensor
from macp.geom.voxel import DenseGrid, SparseTensor

Features = Union[Tensor, SparseTensor, DenseGrid]


def features_of(x: Features) -> Tensor:
    if isinstance(x, SparseTensor):
        return x.feats
    if isinstance(x, DenseGrid):
        return x.values
    return x


def rewrap(like: Features, values: Tensor) -> Features:
    """Put ``values`` in a container of the same kind (and sites) as ``like``."""
    if isinstance(like, SparseTensor):
        return like.with_feats(values)
    if isinstance(like, DenseGrid):
        return DenseGrid(values, dict(like.meta))
    return values
