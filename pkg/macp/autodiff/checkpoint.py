"""
Checkpoint container.

Layout (all integers little-endian):
    magic "MACPCK01" | u32 count | count x entry
    entry: u32 name_len | name (utf-8) | u32 ndim | ndim x u32 dims |
           u8 frozen | prod(dims) x float64 (little-endian)
"""

import logging
import struct
from collections import OrderedDict
from pathlib import Path
from typing import Dict, Iterable, Union

import numpy as np

from macp.autodiff.tensor import Param
from macp.errors import CheckpointError, MissingArtifactError

logger = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"MACPCK01"


def encode_checkpoint(params: Iterable[Param]) -> bytes:
    """Serialize parameters in iteration order."""
    params = list(params)
    chunks = [CHECKPOINT_MAGIC, struct.pack("<I", len(params))]
    for p in params:
        name = p.name.encode("utf-8")
        chunks.append(struct.pack("<I", len(name)))
        chunks.append(name)
        chunks.append(struct.pack("<I", p.value.ndim))
        chunks.append(struct.pack(f"<{p.value.ndim}I", *p.value.shape))
        chunks.append(struct.pack("<B", 1 if p.frozen else 0))
        chunks.append(np.ascontiguousarray(p.value, dtype="<f8").tobytes())
    return b"".join(chunks)


def decode_checkpoint(data: bytes) -> "OrderedDict[str, Param]":
    """Inverse of encode_checkpoint; values come back bitwise equal."""
    if data[:8] != CHECKPOINT_MAGIC:
        raise CheckpointError("bad checkpoint magic")
    offset = 8

    def take(n: int) -> bytes:
        nonlocal offset
        if offset + n > len(data):
            raise CheckpointError(f"checkpoint truncated at byte {offset}")
        chunk = data[offset:offset + n]
        offset += n
        return chunk

    (count,) = struct.unpack("<I", take(4))
    params: "OrderedDict[str, Param]" = OrderedDict()
    for _ in range(count):
        (name_len,) = struct.unpack("<I", take(4))
        raw = take(name_len)
        try:
            name = raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise CheckpointError(f"parameter name {raw!r} is not valid utf-8") from exc
        (ndim,) = struct.unpack("<I", take(4))
        shape = struct.unpack(f"<{ndim}I", take(4 * ndim))
        (frozen,) = struct.unpack("<B", take(1))
        n = int(np.prod(shape, dtype=np.int64))
        values = np.frombuffer(take(8 * n), dtype="<f8").astype(np.float64).reshape(shape)
        params[name] = Param(name, values, frozen=bool(frozen))
    if offset != len(data):
        raise CheckpointError(f"{len(data) - offset} trailing bytes after checkpoint")
    return params


def save_checkpoint(path: Union[str, Path], params: Iterable[Param]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(encode_checkpoint(params))
    logger.info("wrote checkpoint %s", path)
    return path


def load_checkpoint(path: Union[str, Path]) -> Dict[str, Param]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"checkpoint not found: {path}")
    return decode_checkpoint(path.read_bytes())
