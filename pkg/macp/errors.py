"""
Exception hierarchy for MACP.

Library code raises these; only the command-line driver turns them into
process exit codes.
"""


class MACPError(Exception):
    """Base class for all MACP errors."""


class ConfigError(MACPError, ValueError):
    """A configuration field is missing or invalid."""


class ShapeMismatchError(MACPError, ValueError):
    """Channel counts, shapes or coordinate sets do not line up."""


class OutOfBoundsError(MACPError, IndexError):
    """A sparse coordinate falls outside the grid extent."""


class ContractError(MACPError, ValueError):
    """A documented precondition was violated."""


class NonFiniteError(MACPError, ArithmeticError):
    """A NaN or infinity was produced."""

    def __init__(self, op: str, detail: str = ""):
        self.op = op
        message = f"non-finite value produced by '{op}'"
        if detail:
            message += f": {detail}"
        super().__init__(message)


class CheckpointError(MACPError, ValueError):
    """Checkpoint is malformed or does not match the model."""


class MissingArtifactError(MACPError, FileNotFoundError):
    """A required checkpoint or dataset is missing."""


class ScenarioError(MACPError, RuntimeError):
    """World generation failed."""


class MessageDecodeError(MACPError, ValueError):
    """Feature message bytes could not be decoded."""


class MessageMagicError(MessageDecodeError):
    """Message does not start with the expected magic."""


class MessageTruncatedError(MessageDecodeError):
    """Message is shorter than its header announces."""

    def __init__(self, expected: int, actual: int):
        self.expected = expected
        self.actual = actual
        super().__init__(f"truncated message: expected {expected} bytes, got {actual}")


class MessageShapeError(MessageDecodeError):
    """Header shape disagrees with the payload length."""


class FormatError(MACPError, ValueError):
    """A point-cloud or dataset file does not match its documented layout."""
