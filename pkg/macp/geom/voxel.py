"""
Pillar voxelization and the sparse/dense BEV containers.

Grid rows follow the x axis and columns follow y, so cell (row, col) covers
[origin_x + row*dx, origin_x + (row+1)*dx) x [origin_y + col*dy, ...).
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from macp.autodiff import Tensor
from macp.autodiff.functional import reshape, scatter_rows
from macp.errors import ConfigError, OutOfBoundsError, ShapeMismatchError
from macp.geom.geometry import PointCloud

logger = logging.getLogger(__name__)

# Points per pillar at which the count feature saturates
COUNT_SATURATION = 16.0

_KEY_SHIFT = np.int64(1) << np.int64(32)


@dataclass(frozen=True)
class VoxelConfig:
    """BEV grid geometry in the ego frame."""
    origin: Tuple[float, float] = (-32.0, -32.0)
    cell: Tuple[float, float] = (0.5, 0.5)
    extent: Tuple[int, int] = (128, 128)
    channels: int = 2

    def __post_init__(self):
        if self.cell[0] <= 0 or self.cell[1] <= 0:
            raise ConfigError(f"voxel.cell must be positive, got {self.cell}")
        if self.extent[0] < 1 or self.extent[1] < 1:
            raise ConfigError(f"voxel.extent must be >= 1, got {self.extent}")
        object.__setattr__(self, "origin", tuple(float(v) for v in self.origin))
        object.__setattr__(self, "cell", tuple(float(v) for v in self.cell))
        object.__setattr__(self, "extent", tuple(int(v) for v in self.extent))

    @classmethod
    def from_dict(cls, data: Dict) -> "VoxelConfig":
        return cls(
            origin=tuple(data.get("origin", cls.origin)),
            cell=tuple(data.get("cell", cls.cell)),
            extent=tuple(data.get("extent", cls.extent)),
            channels=int(data.get("channels", cls.channels)),
        )

    @property
    def height(self) -> int:
        return self.extent[0]

    @property
    def width(self) -> int:
        return self.extent[1]

    @property
    def upper(self) -> Tuple[float, float]:
        return (self.origin[0] + self.extent[0] * self.cell[0],
                self.origin[1] + self.extent[1] * self.cell[1])

    def cell_of(self, xy: np.ndarray) -> np.ndarray:
        """Integer (row, col) of each (N, 2) point, without range checks."""
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        return np.floor((xy - np.asarray(self.origin)) / np.asarray(self.cell)).astype(np.int64)

    def in_extent(self, cells: np.ndarray) -> np.ndarray:
        cells = np.asarray(cells).reshape(-1, 2)
        return ((cells[:, 0] >= 0) & (cells[:, 0] < self.extent[0])
                & (cells[:, 1] >= 0) & (cells[:, 1] < self.extent[1]))

    def cell_center(self, cells: np.ndarray) -> np.ndarray:
        """Metric center of each (N, 2) integer cell."""
        cells = np.asarray(cells, dtype=np.float64).reshape(-1, 2)
        return np.asarray(self.origin) + (cells + 0.5) * np.asarray(self.cell)

    def contains_xy(self, xy: np.ndarray) -> np.ndarray:
        xy = np.asarray(xy, dtype=np.float64).reshape(-1, 2)
        lo, hi = np.asarray(self.origin), np.asarray(self.upper)
        return np.all((xy >= lo) & (xy < hi), axis=1)


def _keys(coords: np.ndarray) -> np.ndarray:
    coords = coords.astype(np.int64)
    return coords[:, 0] * _KEY_SHIFT + coords[:, 1]


@dataclass
class Rule:
    """Input/output site pairs for one kernel offset."""
    a: int
    b: int
    inputs: np.ndarray
    outputs: np.ndarray


class SparseTensor:
    """
    Occupied integer cells with one feature vector per cell.

    Coordinates are unique and fixed at construction. Containers built with
    ``with_feats`` share the coordinate set, its index and the cached
    convolution rules.
    """

    def __init__(self, coords: np.ndarray, feats: Tensor, _shared: Optional[dict] = None):
        coords = np.asarray(coords, dtype=np.int64).reshape(-1, 2)
        if feats.ndim != 2 or feats.shape[0] != coords.shape[0]:
            raise ShapeMismatchError(
                f"{coords.shape[0]} coordinates but features of shape {feats.shape}")
        self.coords = coords
        self.feats = feats
        if _shared is None:
            keys = _keys(coords)
            if np.unique(keys).size != keys.size:
                raise ShapeMismatchError("sparse coordinates must be unique")
            order = np.argsort(keys, kind="stable")
            index = {(int(r), int(c)): slot for slot, (r, c) in enumerate(coords)}
            _shared = {"keys": keys[order], "order": order, "index": index, "rules": {}}
        self._shared = _shared

    @classmethod
    def empty(cls, channels: int) -> "SparseTensor":
        return cls(np.zeros((0, 2), dtype=np.int64), Tensor(np.zeros((0, channels))))

    @property
    def index(self) -> Dict[Tuple[int, int], int]:
        return self._shared["index"]

    @property
    def channels(self) -> int:
        return self.feats.shape[1]

    def __len__(self) -> int:
        return self.coords.shape[0]

    def lookup(self, row: int, col: int) -> Optional[int]:
        """Slot of an occupied cell, or None."""
        return self.index.get((int(row), int(col)))

    def with_feats(self, feats: Tensor) -> "SparseTensor":
        """Same coordinate set, new features."""
        if feats.ndim != 2 or feats.shape[0] != len(self):
            raise ShapeMismatchError(f"features of shape {feats.shape} for {len(self)} sites")
        return SparseTensor(self.coords, feats, _shared=self._shared)

    def same_sites(self, other: "SparseTensor") -> bool:
        return self._shared is other._shared or np.array_equal(self.coords, other.coords)

    def rules(self, k: int) -> List[Rule]:
        """
        Neighbour pairs for a k x k submanifold kernel.

        For offset (a, b) the input site sits at (i + a - r, j + b - r) relative
        to output site (i, j), with r = k // 2. Offsets with no pairs are
        omitted.
        """
        cache = self._shared["rules"]
        if k in cache:
            return cache[k]
        r = k // 2
        sorted_keys, order = self._shared["keys"], self._shared["order"]
        rules: List[Rule] = []
        for a in range(k):
            for b in range(k):
                neighbour = self.coords + np.array([a - r, b - r], dtype=np.int64)
                nkeys = _keys(neighbour)
                pos = np.searchsorted(sorted_keys, nkeys)
                pos_clipped = np.minimum(pos, max(sorted_keys.size - 1, 0))
                hit = (pos < sorted_keys.size)
                if sorted_keys.size:
                    hit &= sorted_keys[pos_clipped] == nkeys
                outputs = np.nonzero(hit)[0]
                if outputs.size == 0:
                    continue
                rules.append(Rule(a, b, order[pos_clipped[outputs]], outputs))
        cache[k] = rules
        return rules

    def __repr__(self) -> str:
        return f"SparseTensor(sites={len(self)}, channels={self.channels})"


@dataclass
class DenseGrid:
    """H x W x C feature map, row-major."""
    values: Tensor
    meta: Dict = field(default_factory=dict)

    def __post_init__(self):
        if not isinstance(self.values, Tensor):
            self.values = Tensor(self.values)
        if self.values.ndim != 3:
            raise ShapeMismatchError(f"dense grid needs (H, W, C), got {self.values.shape}")

    @classmethod
    def zeros(cls, height: int, width: int, channels: int) -> "DenseGrid":
        return cls(Tensor(np.zeros((height, width, channels))))

    @property
    def shape(self) -> Tuple[int, int, int]:
        return self.values.shape

    @property
    def channels(self) -> int:
        return self.values.shape[2]

    def numpy(self) -> np.ndarray:
        return self.values.value


def voxelize(cloud: PointCloud, cfg: VoxelConfig) -> SparseTensor:
    """
    Bin points into pillars.

    Each occupied pillar carries [min(n / 16, 1), mean intensity]. Points
    outside the half-open extent are dropped.
    """
    if len(cloud) == 0:
        return SparseTensor.empty(2)
    cells = cfg.cell_of(cloud.xy)
    keep = cfg.in_extent(cells)
    if not np.any(keep):
        return SparseTensor.empty(2)
    cells = cells[keep]
    intensity = cloud.points[keep, 3]

    flat = cells[:, 0] * cfg.width + cells[:, 1]
    occupied, inverse = np.unique(flat, return_inverse=True)
    counts = np.bincount(inverse, minlength=occupied.size).astype(np.float64)
    intensity_sum = np.bincount(inverse, weights=intensity, minlength=occupied.size)

    feats = np.stack([np.minimum(counts / COUNT_SATURATION, 1.0), intensity_sum / counts], axis=1)
    coords = np.stack([occupied // cfg.width, occupied % cfg.width], axis=1)
    return SparseTensor(coords, Tensor(feats))


def to_dense(st: SparseTensor, cfg: VoxelConfig) -> DenseGrid:
    """Scatter sparse features into a zero H x W x C grid (differentiable)."""
    if len(st) and not np.all(cfg.in_extent(st.coords)):
        bad = st.coords[~cfg.in_extent(st.coords)][0]
        raise OutOfBoundsError(f"coordinate {tuple(int(v) for v in bad)} outside extent {cfg.extent}")
    flat = st.coords[:, 0] * cfg.width + st.coords[:, 1]
    rows = scatter_rows(st.feats, flat, cfg.height * cfg.width)
    return DenseGrid(reshape(rows, (cfg.height, cfg.width, st.channels)))
