"""Heatmap peak extraction into scored boxes."""

import math
from typing import List

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from macp.geom.voxel import VoxelConfig
from macp.perception.detections import Detection
from macp.perception.targets import HeadOutput

DEFAULT_SCORE_THRESH = 0.3
DEFAULT_MAX_DET = 64
MAX_SCORE = 1.0 - np.finfo(np.float64).eps


def local_maxima(heat: np.ndarray) -> np.ndarray:
    """Cells equal to the maximum of their 3x3 neighbourhood."""
    padded = np.pad(heat, 1, constant_values=-np.inf)
    neighbourhood = sliding_window_view(padded, (3, 3)).max(axis=(2, 3))
    return heat >= neighbourhood


def decode_detections(head: HeadOutput, cfg: VoxelConfig,
                      score_thresh: float = DEFAULT_SCORE_THRESH,
                      max_det: int = DEFAULT_MAX_DET) -> List[Detection]:
    """
    Boxes at 3x3 local maxima scoring at least ``score_thresh``, best first,
    at most ``max_det`` of them. Scores are capped at ``MAX_SCORE`` so
    decoded target maps, which peak at exactly 1.0, stay valid detections.
    """
    heat = head.heatmap.value[..., 0]
    peaks = local_maxima(heat) & (heat >= score_thresh) & (heat > 0.0)
    rows, cols = np.nonzero(peaks)
    if rows.size == 0:
        return []
    scores = heat[rows, cols]
    order = np.argsort(-scores, kind="stable")[:max_det]
    rows, cols = rows[order], cols[order]

    centers = cfg.cell_center(np.stack([rows, cols], axis=1))
    offsets = head.offset.value[rows, cols] * np.asarray(cfg.cell)
    sizes = np.exp(head.size.value[rows, cols])
    yaw = head.yaw.value[rows, cols]

    detections = []
    for n in range(rows.size):
        x, y = centers[n] + offsets[n]
        detections.append(Detection(
            x=float(x), y=float(y),
            length=float(sizes[n, 0]), width=float(sizes[n, 1]),
            yaw=float(math.atan2(yaw[n, 0], yaw[n, 1])),
            score=float(min(scores[order[n]], MAX_SCORE)),
        ))
    return detections
