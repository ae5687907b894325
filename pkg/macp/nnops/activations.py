"""Elementwise nonlinearities on tensors, sparse tensors and dense grids."""

import numpy as np

from macp.autodiff import apply_op
from macp.nnops.containers import Features, features_of, rewrap

_GELU_C = np.sqrt(2.0 / np.pi)
_GELU_A = 0.044715
_PROB_EPS = np.finfo(np.float64).eps


def gelu(x: Features) -> Features:
    """tanh-approximate GELU: 0.5 x (1 + tanh(sqrt(2/pi) (x + 0.044715 x^3)))."""
    t = features_of(x)
    v = t.value
    inner = _GELU_C * (v + _GELU_A * v ** 3)
    th = np.tanh(inner)
    out = 0.5 * v * (1.0 + th)

    def vjp(g):
        d_inner = _GELU_C * (1.0 + 3.0 * _GELU_A * v ** 2)
        return (g * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th ** 2) * d_inner),)

    return rewrap(x, apply_op("gelu", out, (t,), vjp))


def sigmoid(x: Features) -> Features:
    """
    Logistic function, computed as 0.5 (1 + tanh(x / 2)) to stay finite for
    large |x|. Outputs are clipped to [eps, 1 - eps] so they stay strictly
    inside (0, 1).
    """
    t = features_of(x)
    out = np.clip(0.5 * (1.0 + np.tanh(0.5 * t.value)), _PROB_EPS, 1.0 - _PROB_EPS)
    return rewrap(x, apply_op("sigmoid", out, (t,), lambda g: (g * out * (1.0 - out),)))
