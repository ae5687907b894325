"""
AdamW with decoupled weight decay and a cosine learning-rate schedule.

Only non-frozen parameters are touched; frozen ones keep their exact bytes.
"""

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional

import numpy as np

from macp.autodiff.tensor import Param
from macp.errors import ContractError


@dataclass
class OptimState:
    """First/second moments per trainable parameter and the step counter."""
    m: Dict[str, np.ndarray] = field(default_factory=dict)
    v: Dict[str, np.ndarray] = field(default_factory=dict)
    t: int = 0


def adamw_step(
    params: Iterable[Param],
    state: OptimState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 1e-2,
) -> OptimState:
    """
    One AdamW update, in place.

    Args:
        params: Parameters of the model; frozen ones are skipped
        state: Optimizer moments, updated in place
        lr: Learning rate for this step
        beta1, beta2, eps: Adam constants
        weight_decay: Decoupled decay coefficient

    Returns:
        The updated state
    """
    params = list(params)
    trainable = [p for p in params if not p.frozen]
    missing = [p.name for p in trainable if p.grad is None]
    if missing:
        raise ContractError(f"no gradient for trainable params: {missing}")

    state.t += 1
    t = state.t
    for p in trainable:
        g = p.grad
        m = state.m.get(p.name)
        v = state.v.get(p.name)
        if m is None:
            m = np.zeros_like(p.value)
            v = np.zeros_like(p.value)
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * g * g
        state.m[p.name] = m
        state.v[p.name] = v

        m_hat = m / (1.0 - beta1 ** t)
        v_hat = v / (1.0 - beta2 ** t)
        decay = lr * weight_decay * p.value
        p.value = p.value - lr * m_hat / (np.sqrt(v_hat) + eps) - decay
    return state


def clip_grad_norm(params: Iterable[Param], max_norm: Optional[float]) -> float:
    """Scale trainable gradients so their global L2 norm is at most max_norm."""
    trainable = [p for p in params if not p.frozen and p.grad is not None]
    norm = math.sqrt(sum(float(np.sum(p.grad * p.grad)) for p in trainable))
    if max_norm is not None and norm > max_norm > 0:
        factor = max_norm / norm
        for p in trainable:
            p.grad = p.grad * factor
    return norm


def cosine_lr(step: int, total: int, lr0: float) -> float:
    """Cosine annealing from lr0 at step 0 down to 0 at step == total."""
    if total < 1:
        raise ContractError(f"total steps must be >= 1, got {total}")
    step = min(max(step, 0), total)
    return max(0.0, 0.5 * lr0 * (1.0 + math.cos(math.pi * step / total)))
