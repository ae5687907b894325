"""Penalty-reduced focal loss on the heatmap plus L1 on regression targets."""

from typing import Dict

import numpy as np

from macp.autodiff import Tensor, apply_op
from macp.autodiff.functional import add_n, scale
from macp.errors import NonFiniteError, ShapeMismatchError
from macp.perception.targets import HeadOutput

FOCAL_ALPHA = 2.0
FOCAL_BETA = 4.0
LOG_EPS = 1e-12
REGRESSION_WEIGHT = 1.0


def focal_loss(pred: Tensor, target: np.ndarray, alpha: float = FOCAL_ALPHA,
               beta: float = FOCAL_BETA) -> Tensor:
    """
    Sum over cells of -(1-p)^a log p at positives (target == 1) and
    -(1-y)^b p^a log(1-p) elsewhere, divided by max(1, #positives).
    """
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"focal_loss: pred {pred.shape} vs target {target.shape}")
    p = pred.value
    pos = target == 1.0
    n_pos = max(1, int(pos.sum()))
    log_p = np.log(np.maximum(p, LOG_EPS))
    log_q = np.log(np.maximum(1.0 - p, LOG_EPS))
    neg_w = (1.0 - target) ** beta
    pos_term = -((1.0 - p) ** alpha) * log_p
    neg_term = -neg_w * (p ** alpha) * log_q
    value = np.where(pos, pos_term, neg_term).sum() / n_pos

    def vjp(g):
        d_pos = alpha * (1.0 - p) ** (alpha - 1.0) * log_p - (1.0 - p) ** alpha / np.maximum(p, LOG_EPS)
        d_neg = -neg_w * (alpha * p ** (alpha - 1.0) * log_q - p ** alpha / np.maximum(1.0 - p, LOG_EPS))
        return (g * np.where(pos, d_pos, d_neg) / n_pos,)

    return apply_op("focal_loss", np.array(value), (pred,), vjp)


def masked_l1(pred: Tensor, target: np.ndarray, mask: np.ndarray) -> Tensor:
    """Sum of |pred - target| over masked cells, divided by max(1, #masked cells)."""
    if pred.shape != target.shape:
        raise ShapeMismatchError(f"masked_l1: pred {pred.shape} vs target {target.shape}")
    n_pos = max(1, int(mask.sum()))
    diff = pred.value - target
    m = mask[..., None].astype(np.float64)
    value = (np.abs(diff) * m).sum() / n_pos
    return apply_op("masked_l1", np.array(value), (pred,),
                    lambda g: (g * np.sign(diff) * m / n_pos,))


def loss_terms(pred: HeadOutput, target: HeadOutput) -> Dict[str, Tensor]:
    if pred.grid_shape != target.grid_shape:
        raise ShapeMismatchError(f"prediction grid {pred.grid_shape} vs target {target.grid_shape}")
    mask = target.positive_mask()
    return {
        "heatmap": focal_loss(pred.heatmap, target.heatmap.value),
        "offset": masked_l1(pred.offset, target.offset.value, mask),
        "size": masked_l1(pred.size, target.size.value, mask),
        "yaw": masked_l1(pred.yaw, target.yaw.value, mask),
    }


def detection_loss(pred: HeadOutput, target: HeadOutput) -> Tensor:
    terms = loss_terms(pred, target)
    regression = add_n([terms["offset"], terms["size"], terms["yaw"]])
    loss = add_n([terms["heatmap"], scale(regression, REGRESSION_WEIGHT)])
    if not np.isfinite(loss.value):
        detail = ", ".join(f"{k}={v.item():.4g}" for k, v in terms.items())
        raise NonFiniteError("detection_loss", detail)
    return loss
