"""Frame alignment and fusion strategies."""

from macp.fusion.warp import warp_to_ego, warp_index
from macp.fusion.methods import (
    FusionMethod,
    FusionBlock,
    make_concat_reducer,
    fuse_maps,
    post_fusion_conv,
)
from macp.fusion.baselines import early_fuse_clouds, late_fuse_detections

__all__ = [
    'warp_to_ego',
    'warp_index',
    'FusionMethod',
    'FusionBlock',
    'make_concat_reducer',
    'fuse_maps',
    'post_fusion_conv',
    'early_fuse_clouds',
    'late_fuse_detections',
]
