"""
Per-frame detection pipelines: No Fusion, Early Fusion, Late Fusion and
intermediate (MACP) fusion over the wire.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Tuple

from macp.comms.channel import AgentState, ChannelStats, broadcast_round
from macp.errors import ConfigError, ContractError
from macp.fusion.baselines import early_fuse_clouds, late_fuse_detections
from macp.fusion.warp import warp_to_ego
from macp.geom.io import encode_point_cloud
from macp.perception.decode import DEFAULT_MAX_DET, DEFAULT_SCORE_THRESH, decode_detections
from macp.perception.detections import Detection
from macp.scenarios.dataset import Frame, mask_fov

logger = logging.getLogger(__name__)


class PipelineMode(Enum):
    NO_FUSION = "no_fusion"
    EARLY_FUSION = "early_fusion"
    LATE_FUSION = "late_fusion"
    MACP = "macp"

    @classmethod
    def parse(cls, value) -> "PipelineMode":
        if isinstance(value, cls):
            return value
        try:
            return cls(value)
        except ValueError:
            names = ", ".join(m.value for m in cls)
            raise ConfigError(f"unknown pipeline mode '{value}' (expected one of {names})") from None


@dataclass(frozen=True)
class PipelineOptions:
    score_thresh: float = DEFAULT_SCORE_THRESH
    max_det: int = DEFAULT_MAX_DET
    max_agents: Optional[int] = None
    nms_iou: float = 0.5
    # (cx, cy, half_extent) in the ego frame
    fov_mask: Optional[Tuple[float, float, float]] = None


def _ego_cloud(frame: Frame, options: PipelineOptions):
    cloud = frame.ego_cloud
    if options.fov_mask is not None:
        cx, cy, half = options.fov_mask
        cloud = mask_fov(cloud, (cx, cy), half)
    return cloud


def _decode(model, head, options: PipelineOptions) -> List[Detection]:
    return decode_detections(head, model.voxel, options.score_thresh, options.max_det)


def run_frame(frame: Frame, mode, model, options: Optional[PipelineOptions] = None
              ) -> Tuple[List[Detection], ChannelStats]:
    """
    Detect objects in one frame from the ego's point of view.

    Args:
        frame: Frame with the ego at ``world.agents[0]``
        mode: PipelineMode or its name
        model: Single-agent model for the baseline modes, a cooperative
            variant for ``macp``
        options: Thresholds, agent limit and optional ego FOV mask

    Returns:
        (detections in the ego frame, bytes exchanged in the frame)
    """
    mode = PipelineMode.parse(mode)
    options = options or PipelineOptions()
    stats = ChannelStats()
    ego_pose = frame.ego_pose
    ego_cloud = _ego_cloud(frame, options)
    partners = frame.partners(options.max_agents)

    if mode is PipelineMode.NO_FUSION:
        return _decode(model, model.forward_single(ego_cloud), options), stats

    if mode is PipelineMode.EARLY_FUSION:
        for _, cloud, _ in partners:
            stats.record_raw(len(encode_point_cloud(cloud)) - 8, header=8)
        clouds = [(ego_cloud, ego_pose)] + [(cloud, pose) for _, cloud, pose in partners]
        fused = early_fuse_clouds(clouds, ego_pose)
        return _decode(model, model.forward_single(fused), options), stats

    if mode is PipelineMode.LATE_FUSION:
        sets = [(_decode(model, model.forward_single(ego_cloud), options), ego_pose)]
        for _, cloud, pose in partners:
            dets = _decode(model, model.forward_single(cloud), options)
            stats.record_raw(sum(len(d.to_json()) + 1 for d in dets), header=0)
            sets.append((dets, pose))
        return late_fuse_detections(sets, ego_pose, options.nms_iou), stats

    if model.channel is None:
        raise ContractError("macp mode needs a cooperative model with a channel ConAda")
    factor = int(model.cfg.compression_factor)
    ego_map = model.encode(ego_cloud)
    agents = [AgentState(frame.ego_id, ego_pose, model.compress(ego_map), factor)]
    for agent_id, cloud, pose in partners:
        agents.append(AgentState(agent_id, pose, model.compress(model.encode(cloud)), factor))
    received = []
    if len(agents) > 1:
        inboxes, stats = broadcast_round(agents)
        for message in inboxes[frame.ego_id]:
            decompressed = model.decompress(message.grid)
            received.append(warp_to_ego(decompressed, message.pose, ego_pose, model.voxel))
    head = model.fuse_and_predict(ego_map, received)
    return _decode(model, head, options), stats
