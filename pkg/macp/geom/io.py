"""Point-cloud frame files: 8-byte magic then (x, y, z, intensity) float32 records."""

from pathlib import Path
from typing import Union

import numpy as np

from macp.errors import FormatError, MissingArtifactError
from macp.geom.geometry import PointCloud

POINT_CLOUD_MAGIC = b"MACPPC01"
_RECORD = np.dtype("<f4")


def encode_point_cloud(cloud: PointCloud) -> bytes:
    return POINT_CLOUD_MAGIC + cloud.points.astype(_RECORD).tobytes()


def decode_point_cloud(data: bytes) -> PointCloud:
    if data[:8] != POINT_CLOUD_MAGIC:
        raise FormatError(f"bad point-cloud magic {data[:8]!r}")
    body = data[8:]
    if len(body) % 16:
        raise FormatError(f"point-cloud body of {len(body)} bytes is not a whole number of records")
    points = np.frombuffer(body, dtype=_RECORD).astype(np.float64).reshape(-1, 4)
    return PointCloud(points)


def write_point_cloud(path: Union[str, Path], cloud: PointCloud) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_point_cloud(cloud))
    return path


def read_point_cloud(path: Union[str, Path]) -> PointCloud:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"point-cloud file not found: {path}")
    return decode_point_cloud(path.read_bytes())
