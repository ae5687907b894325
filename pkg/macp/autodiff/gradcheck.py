"""Finite-difference oracle for the gradient engine."""

import logging
from typing import Callable, Optional, Sequence

import numpy as np

from macp.autodiff.tensor import Tape, Tensor, backward
from macp.errors import NonFiniteError

logger = logging.getLogger(__name__)

_UNIT_ROUNDOFF = np.finfo(np.float64).eps


def _evaluate(fn: Callable[[], Tensor], what: str) -> float:
    with Tape(check_finite=True):
        value = fn().item()
    if not np.isfinite(value):
        raise NonFiniteError(what, f"loss evaluated to {value}")
    return value


def grad_check(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    eps: float = 1e-5,
    max_samples: Optional[int] = None,
    seed: int = 0,
    atol: float = 1e-8,
) -> float:
    """
    Compare analytic gradients with central differences.

    ``fn`` rebuilds the computation from scratch on every call and returns a
    scalar tensor. Every sampled element contributes
    ``|analytic - numeric| / max(1e-12, |analytic| + |numeric|)`` and the
    maximum over all sampled elements of all inputs is returned. Differences
    below ``atol`` plus the rounding noise of the two loss evaluations
    (``4 u max(1, |f+|, |f-|) / eps``) count as zero.

    Args:
        fn: Zero-argument function returning the scalar loss
        inputs: Tensors to differentiate with respect to (Params or tensors
            created with requires_grad=True)
        eps: Central-difference step
        max_samples: Check at most this many random elements per input
        seed: Seed for choosing sampled elements
        atol: Absolute difference tolerated on top of rounding noise

    Raises:
        NonFiniteError: naming the op that produced NaN/inf, in the analytic
            pass or in any perturbed evaluation
    """
    for tensor in inputs:
        tensor.value = np.ascontiguousarray(tensor.value)
        tensor.grad = None
    with Tape(check_finite=True) as tape:
        loss = fn()
    backward(tape, loss)

    rng = np.random.RandomState(seed)
    worst = 0.0
    for tensor in inputs:
        name = getattr(tensor, "name", "tensor")
        analytic_full = tensor.grad if tensor.grad is not None else np.zeros_like(tensor.value)
        if not np.all(np.isfinite(analytic_full)):
            raise NonFiniteError("backward", f"analytic gradient of {name}")
        flat = tensor.value.reshape(-1)
        indices = np.arange(flat.size)
        if max_samples is not None and flat.size > max_samples:
            indices = np.sort(rng.choice(flat.size, size=max_samples, replace=False))

        numeric = np.empty(indices.size)
        noise = np.empty(indices.size)
        for n, i in enumerate(indices):
            original = flat[i]
            try:
                flat[i] = original + eps
                plus = _evaluate(fn, f"{name}[{i}] + eps")
                flat[i] = original - eps
                minus = _evaluate(fn, f"{name}[{i}] - eps")
            finally:
                flat[i] = original
            numeric[n] = (plus - minus) / (2.0 * eps)
            noise[n] = atol + 4.0 * _UNIT_ROUNDOFF * max(1.0, abs(plus), abs(minus)) / eps

        analytic = analytic_full.reshape(-1)[indices]
        diff = np.maximum(np.abs(analytic - numeric) - noise, 0.0)
        ratio = diff / np.maximum(1e-12, np.abs(analytic) + np.abs(numeric))
        if np.isnan(ratio).any():
            raise NonFiniteError("grad_check", f"relative error of {name}")
        error = float(ratio.max()) if ratio.size else 0.0
        logger.debug("grad_check %s: error %.3e over %d elements", name, error, indices.size)
        worst = max(worst, error)
    return worst
