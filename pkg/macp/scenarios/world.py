"""
Synthetic traffic scenes: rectangular vehicles and sensing agents on a flat
field.

Worlds are a pure function of their seed and configuration.
"""

import logging
from dataclasses import dataclass, field, fields
from typing import Dict, List, Mapping, Optional, Tuple

import numpy as np

from macp.errors import ConfigError, ScenarioError
from macp.geom.geometry import Box2D, Pose2D
from macp.geom.iou import rotated_iou

logger = logging.getLogger(__name__)


def _from_mapping(cls, data: Mapping):
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            continue
        kwargs[key] = tuple(value) if isinstance(value, list) else value
    return cls(**kwargs)


@dataclass(frozen=True)
class SensorConfig:
    """Planar LiDAR model."""
    beams: int = 720
    max_range: float = 50.0
    range_noise: float = 0.02
    angular_noise: float = 0.0
    dropout: float = 0.05
    z_range: Tuple[float, float] = (0.2, 1.8)
    intensity_range: Tuple[float, float] = (0.3, 1.0)

    def __post_init__(self):
        if self.beams < 1 or self.max_range <= 0:
            raise ConfigError(f"sensor needs beams >= 1 and max_range > 0, got {self.beams}, {self.max_range}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"sensor.dropout must lie in [0, 1), got {self.dropout}")
        if self.range_noise < 0 or self.angular_noise < 0:
            raise ConfigError("sensor noise levels must be non-negative")

    @classmethod
    def from_dict(cls, data: Mapping) -> "SensorConfig":
        return _from_mapping(cls, data)

    def noiseless(self) -> "SensorConfig":
        return SensorConfig(self.beams, self.max_range, 0.0, 0.0, 0.0, self.z_range, self.intensity_range)


@dataclass(frozen=True)
class WorldConfig:
    """Field size, object counts and sizes, and agent placement."""
    field_size: Tuple[float, float] = (120.0, 60.0)
    n_objects: Tuple[int, int] = (8, 24)
    object_length: Tuple[float, float] = (3.5, 5.5)
    object_width: Tuple[float, float] = (1.6, 2.2)
    n_agents: Tuple[int, int] = (2, 7)
    partner_radius: float = 25.0
    agent_clearance: float = 3.0
    max_retries: int = 500

    def __post_init__(self):
        lo, hi = self.n_agents
        if not 1 <= lo <= hi <= 7:
            raise ConfigError(f"world.n_agents must satisfy 1 <= min <= max <= 7, got {self.n_agents}")
        if not 0 <= self.n_objects[0] <= self.n_objects[1]:
            raise ConfigError(f"world.n_objects range is invalid: {self.n_objects}")
        if self.field_size[0] <= 0 or self.field_size[1] <= 0:
            raise ConfigError(f"world.field_size must be positive, got {self.field_size}")

    @classmethod
    def from_dict(cls, data: Mapping) -> "WorldConfig":
        return _from_mapping(cls, data)

    @property
    def bounds(self) -> Tuple[float, float, float, float]:
        hx, hy = 0.5 * self.field_size[0], 0.5 * self.field_size[1]
        return (-hx, hx, -hy, hy)


@dataclass(frozen=True)
class AgentSpec:
    agent_id: int
    pose: Pose2D
    sensor: SensorConfig = field(default_factory=SensorConfig)


@dataclass
class World:
    """A static scene. ``agents[0]`` is the ego vehicle."""
    seed: int
    bounds: Tuple[float, float, float, float]
    objects: List[Box2D]
    agents: List[AgentSpec]

    @property
    def ego(self) -> AgentSpec:
        return self.agents[0]

    def agent(self, agent_id: int) -> AgentSpec:
        for spec in self.agents:
            if spec.agent_id == agent_id:
                return spec
        raise ScenarioError(f"agent {agent_id} is not part of world {self.seed}")

    def to_dict(self) -> Dict:
        return {
            "seed": int(self.seed),
            "bounds": list(self.bounds),
            "objects": [[b.x, b.y, b.length, b.width, b.yaw] for b in self.objects],
            "agents": [{"id": a.agent_id, "x": a.pose.x, "y": a.pose.y, "yaw": a.pose.yaw}
                       for a in self.agents],
        }

    @classmethod
    def from_dict(cls, data: Mapping, sensor: Optional[SensorConfig] = None) -> "World":
        sensor = sensor or SensorConfig()
        return cls(
            seed=int(data["seed"]),
            bounds=tuple(data["bounds"]),
            objects=[Box2D(*row) for row in data["objects"]],
            agents=[AgentSpec(int(a["id"]), Pose2D(a["x"], a["y"], a["yaw"]), sensor)
                    for a in data["agents"]],
        )


def _place_agents(rng: np.random.RandomState, cfg: WorldConfig, n_agents: int) -> List[Pose2D]:
    xmin, xmax, ymin, ymax = cfg.bounds
    margin = 2.0
    ego = Pose2D(rng.uniform(xmin + 0.3 * (xmax - xmin), xmax - 0.3 * (xmax - xmin)),
                 rng.uniform(ymin + 0.3 * (ymax - ymin), ymax - 0.3 * (ymax - ymin)),
                 rng.uniform(-np.pi, np.pi))
    poses = [ego]
    for n in range(1, n_agents):
        for _ in range(cfg.max_retries):
            r = rng.uniform(5.0, cfg.partner_radius)
            phi = rng.uniform(-np.pi, np.pi)
            x, y = ego.x + r * np.cos(phi), ego.y + r * np.sin(phi)
            yaw = rng.uniform(-np.pi, np.pi)
            inside = xmin + margin < x < xmax - margin and ymin + margin < y < ymax - margin
            apart = all(np.hypot(x - p.x, y - p.y) > 2.0 * cfg.agent_clearance for p in poses)
            if inside and apart:
                poses.append(Pose2D(x, y, yaw))
                break
        else:
            raise ScenarioError(f"could not place agent {n} after {cfg.max_retries} tries")
    return poses


def _place_objects(rng: np.random.RandomState, cfg: WorldConfig, n_objects: int,
                   agents: List[Pose2D]) -> List[Box2D]:
    xmin, xmax, ymin, ymax = cfg.bounds
    boxes: List[Box2D] = []
    for n in range(n_objects):
        for _ in range(cfg.max_retries):
            length = rng.uniform(*cfg.object_length)
            width = rng.uniform(*cfg.object_width)
            half_diag = 0.5 * np.hypot(length, width)
            box = Box2D(rng.uniform(xmin + half_diag, xmax - half_diag),
                        rng.uniform(ymin + half_diag, ymax - half_diag),
                        length, width, rng.uniform(-np.pi, np.pi))
            clear = all(np.hypot(box.x - p.x, box.y - p.y) > cfg.agent_clearance + half_diag for p in agents)
            if clear and all(rotated_iou(box, other) == 0.0 for other in boxes):
                boxes.append(box)
                break
        else:
            raise ScenarioError(f"could not place object {n} after {cfg.max_retries} tries")
    return boxes


def gen_world(seed: int, cfg: Optional[WorldConfig] = None, sensor: Optional[SensorConfig] = None,
              n_agents: Optional[int] = None) -> World:
    """
    Sample a world.

    Args:
        seed: World seed; identical seeds give identical worlds
        cfg: Placement ranges
        sensor: Sensor model shared by every agent
        n_agents: Fixed agent count; drawn from ``cfg.n_agents`` when None

    Raises:
        ScenarioError: when placement fails within the retry budget
    """
    cfg = cfg or WorldConfig()
    sensor = sensor or SensorConfig()
    rng = np.random.RandomState(seed)
    if n_agents is None:
        n_agents = int(rng.randint(cfg.n_agents[0], cfg.n_agents[1] + 1))
    n_objects = int(rng.randint(cfg.n_objects[0], cfg.n_objects[1] + 1))
    poses = _place_agents(rng, cfg, n_agents)
    objects = _place_objects(rng, cfg, n_objects, poses)
    agents = [AgentSpec(i, pose, sensor) for i, pose in enumerate(poses)]
    logger.debug("world %d: %d objects, %d agents", seed, len(objects), len(agents))
    return World(seed, cfg.bounds, objects, agents)
