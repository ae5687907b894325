"""Point clouds, poses, boxes and BEV grids."""

from macp.geom.geometry import PointCloud, Pose2D, Box2D, wrap_angle, transform_points, transform_box
from macp.geom.voxel import VoxelConfig, SparseTensor, DenseGrid, Rule, voxelize, to_dense
from macp.geom.iou import rotated_iou, clip_polygon, polygon_area
from macp.geom.io import (
    POINT_CLOUD_MAGIC,
    encode_point_cloud,
    decode_point_cloud,
    write_point_cloud,
    read_point_cloud,
)

__all__ = [
    'PointCloud',
    'Pose2D',
    'Box2D',
    'wrap_angle',
    'transform_points',
    'transform_box',
    'VoxelConfig',
    'SparseTensor',
    'DenseGrid',
    'Rule',
    'voxelize',
    'to_dense',
    'rotated_iou',
    'clip_polygon',
    'polygon_area',
    'POINT_CLOUD_MAGIC',
    'encode_point_cloud',
    'decode_point_cloud',
    'write_point_cloud',
    'read_point_cloud',
]
