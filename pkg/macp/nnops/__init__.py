"""Differentiable building blocks."""

from macp.nnops.conv import ConvKernel, subm_conv, pointwise_conv, dense_conv2d
from macp.nnops.activations import gelu, sigmoid
from macp.nnops.layers import NORM_EPS, scale_shift, residual_add, channel_norm
from macp.nnops.containers import features_of, rewrap

__all__ = [
    'ConvKernel',
    'subm_conv',
    'pointwise_conv',
    'dense_conv2d',
    'gelu',
    'sigmoid',
    'NORM_EPS',
    'scale_shift',
    'residual_add',
    'channel_norm',
    'features_of',
    'rewrap',
]
