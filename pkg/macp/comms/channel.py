"""Synchronous broadcast rounds and transmitted-byte accounting."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from macp.comms.message import HEADER_SIZE, FeatureMessage, decode_message, encode_message
from macp.errors import ContractError
from macp.geom.geometry import Pose2D
from macp.geom.voxel import DenseGrid

logger = logging.getLogger(__name__)

BYTES_PER_MB = 2 ** 20


@dataclass
class AgentState:
    """What an agent holds when a round starts."""
    agent_id: int
    pose: Pose2D
    latent: DenseGrid
    factor: int


@dataclass
class ChannelStats:
    messages: int = 0
    payload_bytes: int = 0
    header_bytes: int = 0

    @property
    def total_bytes(self) -> int:
        return self.payload_bytes + self.header_bytes

    def record(self, message_bytes: int) -> None:
        self.messages += 1
        self.header_bytes += HEADER_SIZE
        self.payload_bytes += message_bytes - HEADER_SIZE

    def record_raw(self, payload_bytes: int, header: int = 0) -> None:
        """Account for a non-feature transmission (raw points or boxes)."""
        self.messages += 1
        self.header_bytes += header
        self.payload_bytes += payload_bytes

    def merge(self, other: "ChannelStats") -> "ChannelStats":
        self.messages += other.messages
        self.payload_bytes += other.payload_bytes
        self.header_bytes += other.header_bytes
        return self


def broadcast_round(agents: Sequence[AgentState]) -> Tuple[Dict[int, List[FeatureMessage]], ChannelStats]:
    """
    Every agent serializes its latent once and every other agent receives it.

    Delivery is instantaneous and loss-free. Senders are processed in
    ascending agent id, so each inbox is ordered by sender id.

    Returns:
        (inboxes keyed by receiver id, byte counters of the round)
    """
    ordered = sorted(agents, key=lambda a: a.agent_id)
    ids = [a.agent_id for a in ordered]
    if len(set(ids)) != len(ids):
        raise ContractError(f"duplicate agent ids in broadcast round: {ids}")
    stats = ChannelStats()
    inboxes: Dict[int, List[FeatureMessage]] = {a.agent_id: [] for a in ordered}
    for sender in ordered:
        wire = encode_message(sender.latent, sender.agent_id, sender.pose, sender.factor)
        stats.record(len(wire))
        for receiver in ordered:
            if receiver.agent_id != sender.agent_id:
                inboxes[receiver.agent_id].append(decode_message(wire))
    logger.debug("broadcast round: %d senders, %d bytes", stats.messages, stats.total_bytes)
    return inboxes, stats


def am_megabytes(stats: ChannelStats, n_frames: int) -> float:
    """Average megabytes (2^20 bytes) transmitted per frame, headers included."""
    if n_frames < 1:
        raise ContractError(f"n_frames must be >= 1, got {n_frames}")
    return stats.total_bytes / n_frames / BYTES_PER_MB
