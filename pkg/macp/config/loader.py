"""
JSON configuration: packaged defaults, user overrides and typed views.

    cfg = load_config("experiments/configs/desk.json", overrides={"seed": 3})
    voxel = voxel_config(cfg)
    epochs = require(cfg, "training.epochs", int)
"""

import copy
import json
import logging
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

from macp.errors import ConfigError, MissingArtifactError
from macp.geom.voxel import VoxelConfig
from macp.perception.model import ModelConfig
from macp.scenarios.world import SensorConfig, WorldConfig
from macp.training.trainer import TrainConfig

logger = logging.getLogger(__name__)

DEFAULT_CONFIG_PATH = Path(__file__).with_name("default_config.json")
_MISSING = object()


def deep_merge(base: Mapping, override: Mapping) -> Dict:
    """Recursively merge ``override`` into a copy of ``base``."""
    merged = copy.deepcopy(dict(base))
    for key, value in override.items():
        if isinstance(value, Mapping) and isinstance(merged.get(key), Mapping):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def _read_json(path: Path) -> Dict:
    if not path.exists():
        raise MissingArtifactError(f"config file not found: {path}")
    try:
        with open(path) as f:
            data = json.load(f)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config {path} must hold a JSON object")
    return data


def load_config(path: Optional[Union[str, Path]] = None,
                overrides: Optional[Mapping] = None) -> Dict:
    """
    Defaults, deep-merged with the JSON file at ``path`` and then with
    ``overrides``; the result is validated.
    """
    cfg = _read_json(DEFAULT_CONFIG_PATH)
    if path is not None:
        cfg = deep_merge(cfg, _read_json(Path(path)))
    if overrides:
        cfg = deep_merge(cfg, overrides)
    validate_config(cfg)
    return cfg


def require(cfg: Mapping, dotted: str, kind: Optional[type] = None) -> Any:
    """Fetch ``a.b.c`` from nested mappings, raising ConfigError naming the path."""
    node: Any = cfg
    for part in dotted.split("."):
        if not isinstance(node, Mapping) or node.get(part, _MISSING) is _MISSING:
            raise ConfigError(f"missing config field '{dotted}'")
        node = node[part]
    if kind is not None:
        ok = isinstance(node, kind) and not (kind in (int, float) and isinstance(node, bool))
        if kind is float and isinstance(node, int) and not isinstance(node, bool):
            ok = True
        if not ok:
            raise ConfigError(f"config field '{dotted}' must be {kind.__name__}, got {node!r}")
    return node


def validate_config(cfg: Mapping) -> None:
    require(cfg, "seed", int)
    for section in ("voxel", "model", "world", "sensor", "training", "finetune", "eval", "sweep"):
        require(cfg, section, dict)
    splits = require(cfg, "dataset.splits", dict)
    if not splits:
        raise ConfigError("config field 'dataset.splits' must name at least one split")
    for name in splits:
        kind = require(cfg, f"dataset.splits.{name}.kind", str)
        if kind not in ("single", "cooperative"):
            raise ConfigError(f"config field 'dataset.splits.{name}.kind' must be single or cooperative")
        if require(cfg, f"dataset.splits.{name}.n_frames", int) < 1:
            raise ConfigError(f"config field 'dataset.splits.{name}.n_frames' must be >= 1")
    # typed views raise ConfigError on bad values
    voxel_config(cfg)
    model_config(cfg)
    sensor_config(cfg)
    world_config(cfg)
    train_config(cfg)


def voxel_config(cfg: Mapping) -> VoxelConfig:
    return VoxelConfig.from_dict(require(cfg, "voxel", dict))


def model_config(cfg: Mapping) -> ModelConfig:
    return ModelConfig.from_dict(require(cfg, "model", dict))


def sensor_config(cfg: Mapping) -> SensorConfig:
    return SensorConfig.from_dict(require(cfg, "sensor", dict))


def world_config(cfg: Mapping, split: Optional[str] = None) -> WorldConfig:
    """World settings, with a split's own ``world`` block merged on top."""
    data = require(cfg, "world", dict)
    if split is not None:
        data = deep_merge(data, require(cfg, f"dataset.splits.{split}", dict).get("world", {}))
    return WorldConfig.from_dict(data)


def train_config(cfg: Mapping, section: str = "training") -> TrainConfig:
    return TrainConfig.from_dict(require(cfg, section, dict))


def save_resolved_config(cfg: Mapping, directory: Union[str, Path]) -> Path:
    """Write the fully merged config next to a run's outputs."""
    path = Path(directory) / "resolved_config.json"
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as f:
        json.dump(cfg, f, indent=2, sort_keys=True)
    return path
