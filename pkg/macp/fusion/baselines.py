"""Early fusion (share points) and late fusion (share boxes)."""

import logging
from dataclasses import replace
from typing import List, Sequence, Tuple

from macp.errors import ContractError
from macp.geom.geometry import PointCloud, Pose2D, transform_box, transform_points
from macp.geom.iou import rotated_iou

logger = logging.getLogger(__name__)


def early_fuse_clouds(clouds: Sequence[Tuple[PointCloud, Pose2D]], ego: Pose2D) -> PointCloud:
    """Concatenate every cloud after moving it into the ego frame."""
    fused = PointCloud.empty()
    for cloud, pose in clouds:
        fused = fused.concat(transform_points(cloud, pose, ego))
    return fused


def late_fuse_detections(sets: Sequence[Tuple[Sequence, Pose2D]], ego: Pose2D,
                         nms_iou: float = 0.5) -> List:
    """
    Move every agent's detections to the ego frame and suppress duplicates.

    Greedy in descending score; a box is dropped when its IoU with an
    already kept box exceeds ``nms_iou``.
    """
    if not 0.0 < nms_iou < 1.0:
        raise ContractError(f"nms_iou must lie in (0, 1), got {nms_iou}")
    candidates = []
    for detections, pose in sets:
        for det in detections:
            box = transform_box(det.box, pose, ego)
            candidates.append(replace(det, x=box.x, y=box.y, yaw=box.yaw))
    order = sorted(range(len(candidates)), key=lambda i: -candidates[i].score)

    kept = []
    for i in order:
        det = candidates[i]
        if all(rotated_iou(det.box, k.box) <= nms_iou for k in kept):
            kept.append(det)
    logger.debug("late fusion kept %d of %d boxes", len(kept), len(candidates))
    return kept
