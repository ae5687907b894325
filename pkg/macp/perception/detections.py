"""Scored BEV boxes and their JSON-lines form."""

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, List, Union

from macp.errors import ContractError, FormatError, MissingArtifactError
from macp.geom.geometry import Box2D


@dataclass(frozen=True)
class Detection:
    """Oriented box in the ego frame with a confidence score in (0, 1)."""
    x: float
    y: float
    length: float
    width: float
    yaw: float
    score: float

    def __post_init__(self):
        if self.length <= 0 or self.width <= 0:
            raise ContractError(f"detection size must be positive, got {self.length} x {self.width}")
        if not 0.0 < self.score < 1.0:
            raise ContractError(f"detection score must lie in (0, 1), got {self.score}")

    @property
    def box(self) -> Box2D:
        return Box2D(self.x, self.y, self.length, self.width, self.yaw)

    def to_json(self) -> str:
        return json.dumps({"x": self.x, "y": self.y, "l": self.length, "w": self.width,
                           "yaw": self.yaw, "score": self.score})

    @classmethod
    def from_json(cls, line: str) -> "Detection":
        try:
            d = json.loads(line)
            return cls(d["x"], d["y"], d["l"], d["w"], d["yaw"], d["score"])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise FormatError(f"bad detection record {line!r}: {exc}") from exc


def write_detections(path: Union[str, Path], detections: Iterable[Detection]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        for det in detections:
            f.write(det.to_json() + "\n")
    return path


def read_detections(path: Union[str, Path]) -> List[Detection]:
    path = Path(path)
    if not path.exists():
        raise MissingArtifactError(f"detections file not found: {path}")
    with open(path) as f:
        return [Detection.from_json(line) for line in f if line.strip()]
