"""
FeatureMessage wire format.

    offset  size  field
    0       8     magic b"MACPFM01"
    8       4     agent_id            u32
    12      24    pose x, y, yaw      3 x f64
    36      12    H, W, C_latent      3 x u32
    48      4     compression_factor  u32
    52      ...   payload H*W*C float32, row-major

Everything is little-endian.
"""

import math
import struct
from dataclasses import dataclass

import numpy as np

from macp.autodiff import Tensor
from macp.errors import (
    ContractError,
    MessageDecodeError,
    MessageMagicError,
    MessageShapeError,
    MessageTruncatedError,
    NonFiniteError,
)
from macp.geom.geometry import Pose2D
from macp.geom.voxel import DenseGrid

MESSAGE_MAGIC = b"MACPFM01"
HEADER = struct.Struct("<8sI3d3II")
HEADER_SIZE = HEADER.size
PAYLOAD_DTYPE = np.dtype("<f4")
_U32_MAX = 2 ** 32 - 1


@dataclass
class FeatureMessage:
    """A decoded message: sender id, sender pose, compressed map and its factor."""
    agent_id: int
    pose: Pose2D
    grid: DenseGrid
    factor: int

    @property
    def payload_bytes(self) -> int:
        return int(np.prod(self.grid.shape)) * PAYLOAD_DTYPE.itemsize


def encode_message(grid: DenseGrid, agent_id: int, pose: Pose2D, factor: int) -> bytes:
    """Serialize a latent map; values are rounded to the nearest float32."""
    values = grid.numpy()
    if not np.all(np.isfinite(values)):
        raise NonFiniteError("encode_message", f"latent map of agent {agent_id}")
    for name, v in (("agent_id", agent_id), ("factor", factor)) + tuple(zip("HWC", grid.shape)):
        if not 0 <= int(v) <= _U32_MAX:
            raise ContractError(f"message field {name}={v} does not fit in u32")
    height, width, channels = grid.shape
    header = HEADER.pack(MESSAGE_MAGIC, int(agent_id), pose.x, pose.y, pose.yaw,
                         height, width, channels, int(factor))
    return header + np.ascontiguousarray(values, dtype=PAYLOAD_DTYPE).tobytes()


def decode_message(data: bytes) -> FeatureMessage:
    """
    Inverse of ``encode_message``.

    Raises:
        MessageMagicError: the first 8 bytes are not the magic
        MessageTruncatedError: fewer bytes than the header announces, or too
            few to hold the magic
        MessageShapeError: more bytes than the header announces, or an
            unusable header
    """
    data = bytes(data)
    if len(data) < len(MESSAGE_MAGIC):
        raise MessageTruncatedError(HEADER_SIZE, len(data))
    if data[:8] != MESSAGE_MAGIC:
        raise MessageMagicError(f"bad message magic {data[:8]!r}")
    if len(data) < HEADER_SIZE:
        raise MessageTruncatedError(HEADER_SIZE, len(data))
    _, agent_id, x, y, yaw, height, width, channels, factor = HEADER.unpack_from(data)
    expected = HEADER_SIZE + height * width * channels * PAYLOAD_DTYPE.itemsize
    if len(data) < expected:
        raise MessageTruncatedError(expected, len(data))
    if len(data) > expected:
        raise MessageShapeError(
            f"shape ({height}, {width}, {channels}) needs {expected} bytes, message has {len(data)}")
    if not all(math.isfinite(v) for v in (x, y, yaw)):
        raise MessageDecodeError(f"non-finite pose ({x}, {y}, {yaw}) in message from agent {agent_id}")
    n_values = height * width * channels
    payload = np.zeros(0, dtype=PAYLOAD_DTYPE)
    if n_values:
        payload = np.frombuffer(data, dtype=PAYLOAD_DTYPE, offset=HEADER_SIZE)
    if not np.all(np.isfinite(payload)):
        raise MessageDecodeError(f"non-finite payload in message from agent {agent_id}")
    values = payload.astype(np.float64).reshape(height, width, channels)
    return FeatureMessage(agent_id, Pose2D(x, y, yaw), DenseGrid(Tensor(values)), factor)
