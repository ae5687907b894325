"""Packaged defaults and the JSON config loader."""

from macp.config.loader import (
    DEFAULT_CONFIG_PATH,
    deep_merge,
    load_config,
    require,
    validate_config,
    voxel_config,
    model_config,
    sensor_config,
    world_config,
    train_config,
    save_resolved_config,
)

__all__ = [
    'DEFAULT_CONFIG_PATH',
    'deep_merge',
    'load_config',
    'require',
    'validate_config',
    'voxel_config',
    'model_config',
    'sensor_config',
    'world_config',
    'train_config',
    'save_resolved_config',
]
