"""Signed-range histogram of points around the ego, per source agent role."""

from typing import Sequence

import numpy as np
import pandas as pd

from macp.errors import ContractError
from macp.geom.geometry import PointCloud, Pose2D, transform_points


def signed_ranges(cloud: PointCloud, source: Pose2D, ego: Pose2D) -> np.ndarray:
    """
    Distance of every point to the ego, negative when the point lies behind
    the ego heading (dot product < 0).
    """
    xy = transform_points(cloud, source, ego).xy
    dist = np.hypot(xy[:, 0], xy[:, 1])
    return np.where(xy[:, 0] >= 0.0, dist, -dist)


def signed_range_histogram(frames: Sequence, bins: int = 50, max_range: float = 50.0) -> pd.DataFrame:
    """
    Histogram of signed ranges for the ego's own points and for points sensed
    by surrounding agents.

    Returns:
        DataFrame with columns role, bin_left, bin_right, count, density
    """
    if bins < 2:
        raise ContractError(f"bins must be >= 2, got {bins}")
    edges = np.linspace(-max_range, max_range, bins + 1)
    samples = {"ego": [], "surrounding": []}
    for frame in frames:
        ego = frame.world.ego
        for agent in frame.world.agents:
            role = "ego" if agent.agent_id == ego.agent_id else "surrounding"
            samples[role].append(signed_ranges(frame.clouds[agent.agent_id], agent.pose, ego.pose))

    rows = []
    for role, chunks in samples.items():
        values = np.concatenate(chunks) if chunks else np.zeros(0)
        counts, _ = np.histogram(values, bins=edges)
        density = counts / max(1, counts.sum())
        for left, right, count, dens in zip(edges[:-1], edges[1:], counts, density):
            rows.append({"role": role, "bin_left": left, "bin_right": right,
                         "count": int(count), "density": float(dens)})
    return pd.DataFrame(rows, columns=["role", "bin_left", "bin_right", "count", "density"])


def histogram_modes(df: pd.DataFrame, role: str, min_share: float = 0.02) -> int:
    """Number of local maxima of a role's histogram holding at least ``min_share`` of its mass."""
    density = df[df["role"] == role]["density"].to_numpy()
    padded = np.concatenate([[0.0], density, [0.0]])
    peaks = (density > padded[:-2]) & (density >= padded[2:]) & (density >= min_share)
    return int(peaks.sum())
