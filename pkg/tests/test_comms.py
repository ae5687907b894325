"""
Unit tests for the feature-message wire format and broadcast rounds.

Tests verify:
- Encoding matches the committed golden file byte for byte
- Malformed bytes raise a decode error and never anything else
- Byte accounting for the average-megabytes metric
"""

import os
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from macp.autodiff import Tensor
from macp.comms import (HEADER_SIZE, AgentState, ChannelStats, am_megabytes, broadcast_round, decode_message,
                        encode_message)
from macp.errors import (ContractError, MessageDecodeError, MessageMagicError, MessageShapeError,
                         MessageTruncatedError, NonFiniteError)
from macp.geom import DenseGrid, Pose2D

GOLDEN = Path(__file__).parent / "data" / "feature_message_v1.bin"


def golden_grid():
    return DenseGrid(Tensor(np.array([1.0, -0.5]).reshape(1, 2, 1)))


def latent(seed, shape=(4, 4, 2)):
    return DenseGrid(Tensor(np.random.RandomState(seed).randn(*shape)))


class TestWireFormat:
    """Test encode/decode of one message."""

    def test_header_size(self):
        """Test the fixed header is 52 bytes."""
        assert HEADER_SIZE == 52

    def test_golden_bytes(self):
        """Test the reference message encodes to the committed bytes."""
        wire = encode_message(golden_grid(), 7, Pose2D(1.5, -2.0, 0.25), 4)
        assert wire == GOLDEN.read_bytes()

    def test_golden_decode(self):
        """Test the reference bytes decode to the reference message."""
        msg = decode_message(GOLDEN.read_bytes())
        assert msg.agent_id == 7
        assert msg.pose.as_tuple() == (1.5, -2.0, 0.25)
        assert msg.factor == 4
        assert msg.grid.shape == (1, 2, 1)
        np.testing.assert_array_equal(msg.grid.numpy().ravel(), [1.0, -0.5])
        assert msg.payload_bytes == 8

    def test_float32_rounding(self):
        """Test payloads round to float32 exactly once."""
        grid = latent(0)
        msg = decode_message(encode_message(grid, 1, Pose2D.identity(), 2))
        np.testing.assert_array_equal(msg.grid.numpy(), grid.numpy().astype(np.float32))

    def test_non_finite_rejected(self):
        """Test a NaN latent is refused before encoding."""
        grid = DenseGrid(Tensor(np.array([np.nan, 0.0]).reshape(1, 2, 1)))
        with pytest.raises(NonFiniteError):
            encode_message(grid, 1, Pose2D.identity(), 1)

    def test_negative_id_rejected(self):
        """Test a negative agent id is refused."""
        with pytest.raises(ContractError):
            encode_message(golden_grid(), -1, Pose2D.identity(), 1)

    def test_bad_magic(self):
        """Test a corrupted magic raises."""
        data = bytearray(GOLDEN.read_bytes())
        data[0] = ord("X")
        with pytest.raises(MessageMagicError):
            decode_message(bytes(data))

    def test_truncated(self):
        """Test a short buffer reports expected and actual sizes."""
        data = GOLDEN.read_bytes()
        with pytest.raises(MessageTruncatedError) as err:
            decode_message(data[:-1])
        assert err.value.expected == 60
        assert err.value.actual == 59
        with pytest.raises(MessageTruncatedError):
            decode_message(data[:20])

    def test_shorter_than_magic(self):
        """Test a buffer too short for the magic is reported as truncated."""
        for n in (0, 3, 7):
            with pytest.raises(MessageTruncatedError) as err:
                decode_message(GOLDEN.read_bytes()[:n])
            assert err.value.actual == n

    def test_trailing_bytes(self):
        """Test extra bytes after the payload raise."""
        with pytest.raises(MessageShapeError):
            decode_message(GOLDEN.read_bytes() + b"\x00\x00\x00\x00")

    def test_non_finite_payload(self):
        """Test an infinite payload value raises."""
        data = GOLDEN.read_bytes()[:-4] + np.array([np.inf], dtype="<f4").tobytes()
        with pytest.raises(MessageDecodeError):
            decode_message(data)

    def test_fuzzed_bytes_never_crash(self):
        """Test random corruption only ever raises MessageDecodeError."""
        rng = np.random.RandomState(0)
        base = encode_message(latent(1, (2, 3, 2)), 3, Pose2D(0.5, 0.5, 0.1), 2)
        for _ in range(500):
            data = bytearray(base)
            for pos in rng.randint(0, len(data), size=rng.randint(1, 6)):
                data[pos] = rng.randint(0, 256)
            cut = rng.randint(0, len(data) + 8)
            data = bytes(data[:cut]) if cut <= len(data) else bytes(data) + bytes(cut - len(data))
            try:
                msg = decode_message(data)
            except MessageDecodeError:
                continue
            assert msg.grid.numpy().size * 4 + HEADER_SIZE == len(data)


class TestBroadcast:
    """Test broadcast rounds and byte counting."""

    def agents(self, n, shape=(4, 4, 2)):
        return [AgentState(i, Pose2D(float(i), 0.0, 0.0), latent(i, shape), 4) for i in range(n)]

    def test_every_agent_hears_every_other(self):
        """Test each agent receives every other agent's message in id order."""
        inboxes, stats = broadcast_round(list(reversed(self.agents(3))))
        assert stats.messages == 3
        for receiver, inbox in inboxes.items():
            assert [m.agent_id for m in inbox] == [i for i in range(3) if i != receiver]

    def test_byte_accounting(self):
        """Test total and header bytes per round."""
        _, stats = broadcast_round(self.agents(3))
        per_message = HEADER_SIZE + 4 * 4 * 2 * 4
        assert stats.total_bytes == 3 * per_message
        assert stats.header_bytes == 3 * HEADER_SIZE

    def test_duplicate_ids(self):
        """Test duplicate agent ids raise."""
        agents = self.agents(2)
        agents[1].agent_id = 0
        with pytest.raises(ContractError):
            broadcast_round(agents)

    def test_am_halves_with_channels(self):
        """Test payload halves when the latent channel count halves."""
        _, wide = broadcast_round(self.agents(2, (8, 8, 4)))
        _, narrow = broadcast_round(self.agents(2, (8, 8, 2)))
        assert narrow.payload_bytes * 2 == wide.payload_bytes

    def test_am_megabytes(self):
        """Test AM divides total bytes by frame count in MiB."""
        stats = ChannelStats()
        stats.record_raw(2 ** 20, header=0)
        stats.record_raw(2 ** 20, header=0)
        assert am_megabytes(stats, 2) == 1.0
        with pytest.raises(ContractError):
            am_megabytes(stats, 0)

    def test_merge(self):
        """Test merging stats adds messages and bytes."""
        a, b = ChannelStats(), ChannelStats()
        a.record(100)
        b.record(60)
        a.merge(b)
        assert a.messages == 2
        assert a.total_bytes == 160
