"""The V2V channel: wire format, broadcast and byte accounting."""

from macp.comms.message import (
    MESSAGE_MAGIC,
    HEADER_SIZE,
    FeatureMessage,
    encode_message,
    decode_message,
)
from macp.comms.channel import AgentState, ChannelStats, broadcast_round, am_megabytes

__all__ = [
    'MESSAGE_MAGIC',
    'HEADER_SIZE',
    'FeatureMessage',
    'encode_message',
    'decode_message',
    'AgentState',
    'ChannelStats',
    'broadcast_round',
    'am_megabytes',
]
