"""
Reverse-mode gradient engine.

A Tape records every primitive applied while it is active. Each record keeps
its inputs, its output and a vector-Jacobian closure holding whatever the
forward pass saved. ``backward`` replays the records in reverse and
accumulates adjoints into every reachable Param, frozen or not: freezing only
protects a Param from the optimizer.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from macp.errors import ContractError, NonFiniteError

logger = logging.getLogger(__name__)

VJP = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]


class Tensor:
    """Float64 array that may take part in a recorded computation."""

    __slots__ = ("value", "requires_grad", "grad")

    def __init__(self, value, requires_grad: bool = False):
        self.value = np.asarray(value, dtype=np.float64)
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.value.shape

    @property
    def ndim(self) -> int:
        return self.value.ndim

    @property
    def size(self) -> int:
        return int(self.value.size)

    def item(self) -> float:
        return float(self.value.reshape(-1)[0]) if self.value.size == 1 else float("nan")

    def numpy(self) -> np.ndarray:
        return self.value

    def detach(self) -> "Tensor":
        return Tensor(self.value)

    def __repr__(self) -> str:
        return f"Tensor(shape={self.shape}, requires_grad={self.requires_grad})"


class Param(Tensor):
    """Named model parameter; the unit the PEFT partition works on."""

    __slots__ = ("name", "frozen")

    def __init__(self, name: str, value, frozen: bool = False):
        super().__init__(np.array(value, dtype=np.float64, copy=True), requires_grad=True)
        self.name = name
        self.frozen = frozen

    def __repr__(self) -> str:
        state = "frozen" if self.frozen else "trainable"
        return f"Param({self.name!r}, shape={self.shape}, {state})"


@dataclass
class TapeEntry:
    """One primitive application."""
    op: str
    inputs: Tuple[Tensor, ...]
    output: Tensor
    vjp: VJP


class Tape:
    """
    Ordered record of primitive applications.

    Used as a context manager; ops evaluated outside any tape are not
    recorded, which is how finite-difference checks and inference run.

    Args:
        check_finite: Raise NonFiniteError naming the op as soon as a
            recorded output contains NaN or infinity.
    """

    def __init__(self, check_finite: bool = False):
        self.entries: List[TapeEntry] = []
        self.check_finite = check_finite

    def __enter__(self) -> "Tape":
        _TAPE_STACK.append(self)
        return self

    def __exit__(self, exc_type, exc, tb) -> None:
        _TAPE_STACK.pop()

    def __len__(self) -> int:
        return len(self.entries)

    def ops(self) -> List[str]:
        return [entry.op for entry in self.entries]


_TAPE_STACK: List[Tape] = []


def active_tape() -> Optional[Tape]:
    return _TAPE_STACK[-1] if _TAPE_STACK else None


def apply_op(op: str, value: np.ndarray, inputs: Sequence[Tensor], vjp: VJP) -> Tensor:
    """
    Wrap a primitive's forward value and record it on the active tape.

    Args:
        op: Primitive name, reported by non-finite checks
        value: Forward result
        inputs: Tensors the result depends on, in the order vjp returns grads
        vjp: Maps the output adjoint to one adjoint (or None) per input

    Returns:
        Output tensor
    """
    out = Tensor(value)
    tape = active_tape()
    if tape is None:
        return out
    if tape.check_finite and not np.all(np.isfinite(out.value)):
        raise NonFiniteError(op)
    if any(t.requires_grad for t in inputs):
        out.requires_grad = True
        tape.entries.append(TapeEntry(op, tuple(inputs), out, vjp))
    return out


def backward(tape: Tape, loss: Tensor) -> Dict[str, np.ndarray]:
    """
    Reverse-mode sweep from a scalar loss.

    Sets ``grad`` on every leaf tensor reachable from ``loss`` (Params,
    frozen ones included, and any tensor created with requires_grad) and
    returns the Param gradients keyed by parameter name.
    """
    if loss.value.size != 1:
        raise ContractError(f"backward needs a scalar loss, got shape {loss.shape}")

    adjoints: Dict[int, np.ndarray] = {id(loss): np.ones_like(loss.value)}
    leaves: Dict[int, Tensor] = {id(loss): loss}

    for entry in reversed(tape.entries):
        leaves.pop(id(entry.output), None)
        for tensor in entry.inputs:
            leaves[id(tensor)] = tensor
        upstream = adjoints.pop(id(entry.output), None)
        if upstream is None:
            continue
        grads = entry.vjp(upstream)
        for tensor, grad in zip(entry.inputs, grads):
            if grad is None or not tensor.requires_grad:
                continue
            key = id(tensor)
            if key in adjoints:
                adjoints[key] = adjoints[key] + grad
            else:
                adjoints[key] = np.asarray(grad, dtype=np.float64)

    result: Dict[str, np.ndarray] = {}
    for key, grad in adjoints.items():
        leaf = leaves.get(key)
        if leaf is None or not leaf.requires_grad:
            continue
        leaf.grad = grad.reshape(leaf.shape)
        if isinstance(leaf, Param):
            result[leaf.name] = leaf.grad
    logger.debug("backward over %d tape entries reached %d params", len(tape), len(result))
    return result
