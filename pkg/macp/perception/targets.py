"""
Center-heatmap head outputs and training targets.

Each object is a Gaussian bump peaking at exactly 1.0 on the cell that
contains its center; offset, log-size and (sin, cos) yaw targets are only
written on those peak cells.
"""

import logging
import math
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from macp.autodiff import Tensor
from macp.errors import ShapeMismatchError
from macp.geom.geometry import Box2D
from macp.geom.voxel import VoxelConfig

logger = logging.getLogger(__name__)


@dataclass
class HeadOutput:
    """heatmap (H, W, 1); offset, size and yaw (H, W, 2) each."""
    heatmap: Tensor
    offset: Tensor
    size: Tensor
    yaw: Tensor

    def __post_init__(self):
        hw = self.heatmap.shape[:2]
        for name in ("offset", "size", "yaw"):
            t = getattr(self, name)
            if t.shape != hw + (2,):
                raise ShapeMismatchError(f"{name} shape {t.shape} does not match heatmap {self.heatmap.shape}")

    @property
    def grid_shape(self) -> Tuple[int, int]:
        return self.heatmap.shape[:2]

    def positive_mask(self) -> np.ndarray:
        """Cells where the heatmap is exactly 1 (object centers in a target)."""
        return self.heatmap.value[..., 0] == 1.0


def gaussian_sigma(box: Box2D, cell: float) -> float:
    return max(1.0, min(box.length, box.width) / (6.0 * cell))


def splat_targets(gts: Sequence[Box2D], cfg: VoxelConfig) -> HeadOutput:
    """Render ground-truth boxes into heatmap and regression targets."""
    height, width = cfg.extent
    heat = np.zeros((height, width))
    offset = np.zeros((height, width, 2))
    size = np.zeros((height, width, 2))
    yaw = np.zeros((height, width, 2))
    rows, cols = np.arange(height)[:, None], np.arange(width)[None, :]

    skipped = 0
    for box in gts:
        cell = cfg.cell_of(np.array([[box.x, box.y]]))[0]
        if not cfg.in_extent(cell[None, :])[0]:
            skipped += 1
            continue
        i, j = int(cell[0]), int(cell[1])
        sigma = gaussian_sigma(box, cfg.cell[0])
        bump = np.exp(-((rows - i) ** 2 + (cols - j) ** 2) / (2.0 * sigma ** 2))
        np.maximum(heat, bump, out=heat)
        center = cfg.cell_center(cell[None, :])[0]
        offset[i, j] = (np.array([box.x, box.y]) - center) / np.asarray(cfg.cell)
        size[i, j] = (math.log(box.length), math.log(box.width))
        yaw[i, j] = (math.sin(box.yaw), math.cos(box.yaw))
    if skipped:
        logger.warning("splat_targets skipped %d boxes outside the grid", skipped)
    return HeadOutput(Tensor(heat[..., None]), Tensor(offset), Tensor(size), Tensor(yaw))
