"""Model checkpoints with a JSON sidecar describing the architecture."""

import json
import logging
from pathlib import Path
from typing import Dict, Optional, Tuple, Union

from macp.autodiff import load_checkpoint, save_checkpoint
from macp.errors import FormatError, MissingArtifactError
from macp.geom.voxel import VoxelConfig
from macp.perception.model import MACPModel, ModelConfig

logger = logging.getLogger(__name__)


def sidecar_path(path: Union[str, Path]) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def save_model(model: MACPModel, path: Union[str, Path], extra: Optional[Dict] = None) -> Path:
    """Write ``path`` (parameters) and ``path.json`` (model and voxel config)."""
    path = save_checkpoint(path, model.params())
    voxel = model.voxel
    meta = {
        "model": model.cfg.to_dict(),
        "voxel": {"origin": list(voxel.origin), "cell": list(voxel.cell),
                  "extent": list(voxel.extent), "channels": voxel.channels},
    }
    if extra:
        meta.update(extra)
    with open(sidecar_path(path), "w") as f:
        json.dump(meta, f, indent=2, sort_keys=True)
    return path


def load_model(path: Union[str, Path]) -> Tuple[MACPModel, Dict]:
    """
    Rebuild a model saved by ``save_model``, frozen flags included.

    Returns:
        (model, sidecar metadata)
    """
    path = Path(path)
    side = sidecar_path(path)
    if not side.exists():
        raise MissingArtifactError(f"model description not found: {side}")
    try:
        with open(side) as f:
            meta = json.load(f)
    except json.JSONDecodeError as exc:
        raise FormatError(f"unreadable model description {side}: {exc}") from exc
    state = load_checkpoint(path)
    model = MACPModel(ModelConfig.from_dict(meta["model"]), VoxelConfig.from_dict(meta["voxel"]))
    model.load_state(state, strict=True)
    for p in model.params():
        p.frozen = state[p.name].frozen
    logger.info("loaded model %s (%d params)", path, len(state))
    return model, meta
