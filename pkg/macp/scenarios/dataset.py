"""
Frames, dataset generation and the on-disk dataset layout.

A dataset directory holds ``manifest.json`` (seed, configs and per-frame
world description) and ``frames/`` with one point-cloud file per agent and
one ground-truth JSON-lines file per frame.
"""

import json
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from macp.errors import ContractError, FormatError, MissingArtifactError
from macp.geom.geometry import Box2D, PointCloud, Pose2D, transform_box
from macp.geom.io import read_point_cloud, write_point_cloud
from macp.geom.voxel import VoxelConfig
from macp.scenarios.lidar import cast_rays
from macp.scenarios.world import SensorConfig, World, WorldConfig, gen_world

logger = logging.getLogger(__name__)

DATASET_FORMAT = "macp-dataset-1"


class DatasetKind(Enum):
    SINGLE = "single"
    COOPERATIVE = "cooperative"


@dataclass
class Frame:
    """
    One synchronized capture.

    ``clouds`` holds each agent's cloud in its own frame; ``gts`` are boxes in
    the ego frame; ``visible_by`` lists, per agent, the world objects it hit.
    """
    frame_id: int
    kind: DatasetKind
    world: World
    clouds: Dict[int, PointCloud]
    gts: List[Box2D]
    visible_by: Dict[int, List[int]] = field(default_factory=dict)

    @property
    def ego_id(self) -> int:
        return self.world.ego.agent_id

    @property
    def ego_pose(self) -> Pose2D:
        return self.world.ego.pose

    @property
    def ego_cloud(self) -> PointCloud:
        return self.clouds[self.ego_id]

    @property
    def agent_ids(self) -> List[int]:
        return [a.agent_id for a in self.world.agents]

    def partners(self, max_agents: Optional[int] = None) -> List[Tuple[int, PointCloud, Pose2D]]:
        """Non-ego agents in id order, limited so at most ``max_agents`` agents take part."""
        others = [(a.agent_id, self.clouds[a.agent_id], a.pose) for a in self.world.agents[1:]]
        if max_agents is not None:
            others = others[:max(0, max_agents - 1)]
        return others

    def gts_visible_to(self, agent_ids: Sequence[int], voxel: VoxelConfig) -> List[Box2D]:
        """Ego-frame gt boxes hit by any of ``agent_ids`` and inside the grid."""
        seen = sorted({i for a in agent_ids for i in self.visible_by.get(a, [])})
        return _ego_boxes(self.world, seen, voxel)


def _ego_boxes(world: World, object_ids: Sequence[int], voxel: VoxelConfig) -> List[Box2D]:
    identity = Pose2D.identity()
    boxes = [transform_box(world.objects[i], identity, world.ego.pose) for i in object_ids]
    return [b for b in boxes if voxel.contains_xy(np.array([[b.x, b.y]]))[0]]


def frame_seed(seed: int, index: int) -> int:
    """Independent per-frame seed derived from the dataset seed."""
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def make_frame(index: int, kind: DatasetKind, seed: int, world_cfg: WorldConfig,
               sensor: SensorConfig, voxel: VoxelConfig) -> Frame:
    n_agents = 1 if kind is DatasetKind.SINGLE else None
    world = gen_world(frame_seed(seed, index), world_cfg, sensor, n_agents=n_agents)
    clouds, visible = {}, {}
    for agent in world.agents:
        points, hit = cast_rays(world, agent)
        clouds[agent.agent_id] = PointCloud(points)
        visible[agent.agent_id] = sorted(int(i) for i in np.unique(hit))
    seen = sorted({i for ids in visible.values() for i in ids})
    if len(clouds[world.ego.agent_id]) == 0:
        logger.warning("frame %d: ego cloud is empty", index)
    return Frame(index, kind, world, clouds, _ego_boxes(world, seen, voxel), visible)


def _make_frame_args(args):
    return make_frame(*args)


def make_dataset(kind: Union[str, DatasetKind], n_frames: int, seed: int,
                 world_cfg: Optional[WorldConfig] = None, sensor: Optional[SensorConfig] = None,
                 voxel: Optional[VoxelConfig] = None, workers: int = 1) -> List[Frame]:
    """
    Generate ``n_frames`` frames.

    single: one agent per frame. cooperative: 2-7 agents, ``agents[0]`` is
    the ego. Ground truth is every object hit by at least one participating
    agent whose center lies inside the ego grid. Output does not depend on
    ``workers``.
    """
    if n_frames < 1:
        raise ContractError(f"n_frames must be >= 1, got {n_frames}")
    kind = DatasetKind(kind) if not isinstance(kind, DatasetKind) else kind
    world_cfg = world_cfg or WorldConfig()
    sensor = sensor or SensorConfig()
    voxel = voxel or VoxelConfig()
    jobs = [(i, kind, seed, world_cfg, sensor, voxel) for i in range(n_frames)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            frames = list(pool.map(_make_frame_args, jobs, chunksize=max(1, n_frames // (4 * workers))))
    else:
        frames = [make_frame(*job) for job in jobs]
    logger.info("generated %d %s frames (seed %d)", n_frames, kind.value, seed)
    return frames


def _box_json(box: Box2D) -> str:
    return json.dumps({"x": box.x, "y": box.y, "l": box.length, "w": box.width, "yaw": box.yaw})


def save_dataset(frames: Sequence[Frame], directory: Union[str, Path], seed: int,
                 world_cfg: WorldConfig, sensor: SensorConfig) -> Path:
    """Write manifest, point clouds and gt files. Byte-identical for identical input."""
    directory = Path(directory)
    frame_dir = directory / "frames"
    frame_dir.mkdir(parents=True, exist_ok=True)
    entries = []
    for frame in frames:
        cloud_files = {}
        for agent_id, cloud in sorted(frame.clouds.items()):
            name = f"{frame.frame_id:06d}_agent{agent_id}.bin"
            write_point_cloud(frame_dir / name, cloud)
            cloud_files[str(agent_id)] = name
        gt_name = f"{frame.frame_id:06d}_gt.jsonl"
        with open(frame_dir / gt_name, "w") as f:
            for box in frame.gts:
                f.write(_box_json(box) + "\n")
        entries.append({
            "frame_id": frame.frame_id,
            "world": frame.world.to_dict(),
            "clouds": cloud_files,
            "gt": gt_name,
            "visible_by": {str(k): v for k, v in sorted(frame.visible_by.items())},
        })
    kind = frames[0].kind.value if frames else DatasetKind.SINGLE.value
    manifest = {
        "format": DATASET_FORMAT,
        "kind": kind,
        "seed": int(seed),
        "n_frames": len(entries),
        "world_config": asdict(world_cfg),
        "sensor_config": asdict(sensor),
        "frames": entries,
    }
    with open(directory / "manifest.json", "w") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    logger.info("wrote %d frames to %s", len(entries), directory)
    return directory


def load_manifest(directory: Union[str, Path]) -> Dict:
    path = Path(directory) / "manifest.json"
    if not path.exists():
        raise MissingArtifactError(f"dataset manifest not found: {path}")
    try:
        with open(path) as f:
            manifest = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable manifest {path}: {exc}") from exc
    if manifest.get("format") != DATASET_FORMAT:
        raise FormatError(f"{path} is not a {DATASET_FORMAT} manifest")
    return manifest


def load_dataset(directory: Union[str, Path]) -> List[Frame]:
    """Read a dataset written by ``save_dataset``."""
    directory = Path(directory)
    manifest = load_manifest(directory)
    sensor = SensorConfig.from_dict(manifest["sensor_config"])
    kind = DatasetKind(manifest["kind"])
    frames = []
    for entry in manifest["frames"]:
        world = World.from_dict(entry["world"], sensor)
        clouds = {int(k): read_point_cloud(directory / "frames" / name)
                  for k, name in entry["clouds"].items()}
        gt_path = directory / "frames" / entry["gt"]
        if not gt_path.exists():
            raise MissingArtifactError(f"ground-truth file not found: {gt_path}")
        gts = []
        with open(gt_path) as f:
            for line in f:
                if line.strip():
                    d = json.loads(line)
                    gts.append(Box2D(d["x"], d["y"], d["l"], d["w"], d["yaw"]))
        visible = {int(k): list(v) for k, v in entry.get("visible_by", {}).items()}
        frames.append(Frame(int(entry["frame_id"]), kind, world, clouds, gts, visible))
    return frames


def mask_fov(cloud: PointCloud, center: Tuple[float, float], half_extent: float) -> PointCloud:
    """Drop points with |x - cx| <= h and |y - cy| <= h."""
    if half_extent <= 0:
        raise ContractError(f"mask half extent must be positive, got {half_extent}")
    xy = cloud.xy
    inside = (np.abs(xy[:, 0] - center[0]) <= half_extent) & (np.abs(xy[:, 1] - center[1]) <= half_extent)
    return cloud.select(~inside)
