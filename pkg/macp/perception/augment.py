"""Global scale and rotation augmentation for pretraining frames."""

from typing import List, Sequence, Tuple

import numpy as np

from macp.geom.geometry import Box2D, PointCloud, wrap_angle

SCALE_RANGE = (0.95, 1.05)
ROTATION_RANGE = (-np.pi / 8, np.pi / 8)


def augment_sample(cloud: PointCloud, boxes: Sequence[Box2D],
                   rng: np.random.RandomState) -> Tuple[PointCloud, List[Box2D]]:
    """Apply one random scale and rotation about the sensor to points and boxes alike."""
    s = rng.uniform(*SCALE_RANGE)
    theta = rng.uniform(*ROTATION_RANGE)
    c, si = np.cos(theta), np.sin(theta)
    rot = np.array([[c, -si], [si, c]])

    pts = cloud.points.copy()
    pts[:, :2] = s * pts[:, :2] @ rot.T
    pts[:, 2] *= s
    out_boxes = []
    for box in boxes:
        center = s * rot @ np.array([box.x, box.y])
        out_boxes.append(Box2D(float(center[0]), float(center[1]), box.length * s, box.width * s,
                               wrap_angle(box.yaw + theta)))
    return PointCloud(pts), out_boxes
