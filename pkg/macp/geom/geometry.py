"""
Planar geometry: point clouds, SE(2) poses and oriented boxes.

Every agent senses in its own frame; poses place those frames in the world.
"""

import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np

from macp.errors import ContractError


def wrap_angle(angle: float) -> float:
    """Normalize an angle to (-pi, pi]."""
    wrapped = math.remainder(float(angle), 2.0 * math.pi)
    if wrapped <= -math.pi:
        wrapped += 2.0 * math.pi
    return wrapped


@dataclass(frozen=True, eq=False)
class PointCloud:
    """Point cloud as an (N, 4) array of [x, y, z, intensity]."""
    points: np.ndarray

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 4)
        if not np.all(np.isfinite(pts)):
            raise ContractError("point cloud contains non-finite values")
        if pts.size and (pts[:, 3].min() < 0.0 or pts[:, 3].max() > 1.0):
            raise ContractError("intensity outside [0, 1]")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @classmethod
    def empty(cls) -> "PointCloud":
        return cls(np.zeros((0, 4)))

    @property
    def xy(self) -> np.ndarray:
        return self.points[:, :2]

    def __len__(self) -> int:
        return self.points.shape[0]

    def concat(self, other: "PointCloud") -> "PointCloud":
        return PointCloud(np.vstack([self.points, other.points]))

    def select(self, mask: np.ndarray) -> "PointCloud":
        return PointCloud(self.points[mask])


@dataclass(frozen=True)
class Pose2D:
    """Vehicle pose in the world: position (m) and heading (rad)."""
    x: float
    y: float
    yaw: float

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.x, self.y, self.yaw)):
            raise ContractError(f"non-finite pose {self.x}, {self.y}, {self.yaw}")
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "yaw", wrap_angle(self.yaw))

    @classmethod
    def identity(cls) -> "Pose2D":
        return cls(0.0, 0.0, 0.0)

    @property
    def rotation(self) -> np.ndarray:
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        return np.array([[c, -s], [s, c]])

    @property
    def translation(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def to_world(self, xy: np.ndarray) -> np.ndarray:
        """Map (N, 2) local coordinates into the world frame."""
        return xy @ self.rotation.T + self.translation

    def from_world(self, xy: np.ndarray) -> np.ndarray:
        """Map (N, 2) world coordinates into this local frame."""
        return (xy - self.translation) @ self.rotation

    def as_tuple(self) -> Tuple[float, float, float]:
        return (self.x, self.y, self.yaw)


@dataclass(frozen=True)
class Box2D:
    """Oriented BEV rectangle: center, length along heading, width across."""
    x: float
    y: float
    length: float
    width: float
    yaw: float

    def corners(self) -> np.ndarray:
        """Four corners, counter-clockwise, as a (4, 2) array."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        hl, hw = 0.5 * self.length, 0.5 * self.width
        local = np.array([[hl, hw], [-hl, hw], [-hl, -hw], [hl, -hw]])
        rot = np.array([[c, -s], [s, c]])
        return local @ rot.T + np.array([self.x, self.y])

    @property
    def area(self) -> float:
        return self.length * self.width

    def contains(self, xy: np.ndarray) -> np.ndarray:
        """Boolean mask of (N, 2) points inside the closed rectangle."""
        c, s = math.cos(self.yaw), math.sin(self.yaw)
        d = np.asarray(xy, dtype=np.float64).reshape(-1, 2) - np.array([self.x, self.y])
        u = d[:, 0] * c + d[:, 1] * s
        v = -d[:, 0] * s + d[:, 1] * c
        return (np.abs(u) <= 0.5 * self.length) & (np.abs(v) <= 0.5 * self.width)


def transform_points(cloud: PointCloud, from_pose: Pose2D, to_pose: Pose2D) -> PointCloud:
    """
    Re-express a cloud sensed in ``from_pose``'s frame in ``to_pose``'s frame.

    z and intensity pass through unchanged.
    """
    if from_pose == to_pose or len(cloud) == 0:
        return cloud
    pts = cloud.points.copy()
    pts[:, :2] = to_pose.from_world(from_pose.to_world(cloud.xy))
    return PointCloud(pts)


def transform_box(box: Box2D, from_pose: Pose2D, to_pose: Pose2D) -> Box2D:
    """Re-express a box from one frame in another."""
    center = to_pose.from_world(from_pose.to_world(np.array([[box.x, box.y]])))[0]
    yaw = wrap_angle(box.yaw + from_pose.yaw - to_pose.yaw)
    return Box2D(float(center[0]), float(center[1]), box.length, box.width, yaw)
