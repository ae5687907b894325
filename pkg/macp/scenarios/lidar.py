"""2D ray-casting LiDAR with first-hit occlusion."""

from typing import Tuple

import numpy as np

from macp.geom.geometry import PointCloud
from macp.scenarios.world import AgentSpec, World

_PARALLEL_EPS = 1e-12
_MIN_RANGE = 1e-9


def _edges(world: World) -> Tuple[np.ndarray, np.ndarray]:
    """Start points and direction vectors of every object edge, four per object."""
    if not world.objects:
        return np.zeros((0, 2)), np.zeros((0, 2))
    corners = np.stack([box.corners() for box in world.objects])
    starts = corners.reshape(-1, 2)
    ends = np.roll(corners, -1, axis=1).reshape(-1, 2)
    return starts, ends - starts


def ray_ranges(origin: np.ndarray, angles: np.ndarray, world: World,
               max_range: float) -> Tuple[np.ndarray, np.ndarray]:
    """
    Distance to the first object edge along each ray and the object hit.

    Rays without a hit within ``max_range`` get range inf and object -1.
    """
    n_rays = angles.size
    starts, edges = _edges(world)
    if starts.shape[0] == 0:
        return np.full(n_rays, np.inf), np.full(n_rays, -1)
    d = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    w = starts - origin
    denom = d[:, 0:1] * edges[None, :, 1] - d[:, 1:2] * edges[None, :, 0]
    parallel = np.abs(denom) < _PARALLEL_EPS
    safe = np.where(parallel, 1.0, denom)
    t = (w[:, 0] * edges[:, 1] - w[:, 1] * edges[:, 0])[None, :] / safe
    u = (w[None, :, 0] * d[:, 1:2] - w[None, :, 1] * d[:, 0:1]) / safe
    hit = ~parallel & (t > _MIN_RANGE) & (u >= 0.0) & (u <= 1.0) & (t <= max_range)
    t = np.where(hit, t, np.inf)
    nearest = np.argmin(t, axis=1)
    ranges = t[np.arange(n_rays), nearest]
    objects = np.where(np.isfinite(ranges), nearest // 4, -1)
    return ranges, objects


def cast_rays(world: World, agent: AgentSpec) -> Tuple[np.ndarray, np.ndarray]:
    """
    One sweep of ``agent``'s sensor.

    Returns:
        (points (N, 4) in the agent frame, index of the object each point hit)
    """
    sensor = agent.sensor
    rng = np.random.RandomState([int(world.seed) % 2 ** 32, int(agent.agent_id)])
    beams = sensor.beams
    # draws have fixed sizes so every stream stays aligned regardless of hits
    angle_noise = rng.normal(0.0, 1.0, beams) * sensor.angular_noise
    range_noise = rng.normal(0.0, 1.0, beams) * sensor.range_noise
    keep = rng.uniform(0.0, 1.0, beams) >= sensor.dropout
    z = rng.uniform(*sensor.z_range, size=beams)
    intensity = rng.uniform(*sensor.intensity_range, size=beams)

    pose = agent.pose
    local_angles = 2.0 * np.pi * np.arange(beams) / beams + angle_noise
    ranges, objects = ray_ranges(pose.translation, pose.yaw + local_angles, world, sensor.max_range)
    valid = np.isfinite(ranges) & keep
    r = np.maximum(ranges[valid] + range_noise[valid], 0.0)
    a = local_angles[valid]
    points = np.stack([r * np.cos(a), r * np.sin(a), z[valid], intensity[valid]], axis=1)
    return points.reshape(-1, 4), objects[valid]


def lidar_scan(world: World, agent: AgentSpec) -> PointCloud:
    """Point cloud of one agent in its own frame; deterministic in (world seed, agent id)."""
    points, _ = cast_rays(world, agent)
    return PointCloud(points)
