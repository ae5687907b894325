"""Resampling of a sender's BEV map into the ego frame."""

import numpy as np

from macp.autodiff.functional import gather_rows, reshape
from macp.errors import ShapeMismatchError
from macp.geom.geometry import Pose2D
from macp.geom.voxel import DenseGrid, VoxelConfig


def warp_index(sender: Pose2D, ego: Pose2D, cfg: VoxelConfig):
    """
    For every ego cell, the flat index of the sender cell containing the
    same world point, and whether that cell is inside the sender grid.
    """
    rows, cols = np.meshgrid(np.arange(cfg.height), np.arange(cfg.width), indexing="ij")
    cells = np.stack([rows.ravel(), cols.ravel()], axis=1)
    world = ego.to_world(cfg.cell_center(cells))
    src = cfg.cell_of(sender.from_world(world))
    valid = cfg.in_extent(src)
    flat = np.where(valid, src[:, 0] * cfg.width + src[:, 1], 0)
    return flat, valid


def warp_to_ego(grid: DenseGrid, sender: Pose2D, ego: Pose2D, cfg: VoxelConfig) -> DenseGrid:
    """Nearest-neighbour SE(2) warp; ego cells that map outside the sender grid are zero."""
    height, width, channels = grid.shape
    if (height, width) != cfg.extent:
        raise ShapeMismatchError(f"grid {grid.shape[:2]} does not match voxel extent {cfg.extent}")
    if sender == ego:
        return grid
    flat, valid = warp_index(sender, ego, cfg)
    rows = reshape(grid.values, (height * width, channels))
    warped = gather_rows(rows, flat, valid)
    return DenseGrid(reshape(warped, (height, width, channels)), dict(grid.meta))
