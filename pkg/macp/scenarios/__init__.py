"""Synthetic worlds, LiDAR and datasets."""

from macp.scenarios.world import SensorConfig, WorldConfig, AgentSpec, World, gen_world
from macp.scenarios.lidar import ray_ranges, cast_rays, lidar_scan
from macp.scenarios.dataset import (
    DatasetKind,
    Frame,
    frame_seed,
    make_frame,
    make_dataset,
    save_dataset,
    load_manifest,
    load_dataset,
    mask_fov,
)
from macp.scenarios.diagnostics import signed_ranges, signed_range_histogram, histogram_modes

__all__ = [
    'SensorConfig',
    'WorldConfig',
    'AgentSpec',
    'World',
    'gen_world',
    'ray_ranges',
    'cast_rays',
    'lidar_scan',
    'DatasetKind',
    'Frame',
    'frame_seed',
    'make_frame',
    'make_dataset',
    'save_dataset',
    'load_manifest',
    'load_dataset',
    'mask_fov',
    'signed_ranges',
    'signed_range_histogram',
    'histogram_modes',
]
