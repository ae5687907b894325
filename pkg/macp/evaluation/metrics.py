"""
Greedy matching and all-point interpolated average precision.

Detections from every frame are ranked together by score; within a frame a
detection may only match that frame's ground truth.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from macp.errors import ContractError
from macp.geom.geometry import Box2D
from macp.geom.iou import rotated_iou

IOU_THRESHOLDS = (0.5, 0.7)
RANGE_BUCKETS: Tuple[Tuple[str, float, float], ...] = (
    ("0-10m", 0.0, 10.0),
    ("10-20m", 10.0, 20.0),
    ("20m+", 20.0, float("inf")),
)


@dataclass
class MatchResult:
    """Scores and TP flags of all detections, plus the number of ground-truth boxes."""
    scores: np.ndarray
    tp: np.ndarray
    n_gt: int

    @classmethod
    def empty(cls) -> "MatchResult":
        return cls(np.zeros(0), np.zeros(0, dtype=bool), 0)

    def extend(self, other: "MatchResult") -> "MatchResult":
        return MatchResult(np.concatenate([self.scores, other.scores]),
                           np.concatenate([self.tp, other.tp]), self.n_gt + other.n_gt)


def greedy_match(dets: Sequence, gts: Sequence[Box2D], iou_thresh: float) -> MatchResult:
    """Match each detection, best score first, to the free gt with highest IoU >= thresh."""
    if not 0.0 < iou_thresh < 1.0:
        raise ContractError(f"iou_thresh must lie in (0, 1), got {iou_thresh}")
    scores = np.array([d.score for d in dets], dtype=np.float64)
    order = np.argsort(-scores, kind="stable")
    taken = np.zeros(len(gts), dtype=bool)
    tp = np.zeros(len(dets), dtype=bool)
    for i in order:
        best, best_iou = -1, -1.0
        for j, gt in enumerate(gts):
            if taken[j]:
                continue
            iou = rotated_iou(dets[i].box, gt)
            if iou >= iou_thresh and iou > best_iou:
                best, best_iou = j, iou
        if best >= 0:
            taken[best] = True
            tp[i] = True
    return MatchResult(scores, tp, len(gts))


def average_precision(result: MatchResult) -> float:
    """
    Area under the precision envelope over recall.

    With no ground truth the AP is 1.0 when there are also no detections and
    0.0 otherwise.
    """
    if result.n_gt == 0:
        return 1.0 if result.scores.size == 0 else 0.0
    if result.scores.size == 0:
        return 0.0
    order = np.argsort(-result.scores, kind="stable")
    tp = result.tp[order].astype(np.float64)
    tp_cum = np.cumsum(tp)
    precision = tp_cum / np.arange(1, tp.size + 1)
    recall = tp_cum / result.n_gt

    mrec = np.concatenate([[0.0], recall, [1.0]])
    mpre = np.concatenate([[0.0], precision, [0.0]])
    mpre = np.maximum.accumulate(mpre[::-1])[::-1]
    steps = np.nonzero(mrec[1:] != mrec[:-1])[0]
    return float(np.sum((mrec[steps + 1] - mrec[steps]) * mpre[steps + 1]))


def match_and_ap(dets: Sequence, gts: Sequence[Box2D], iou_thresh: float) -> float:
    """AP of one set of detections against one set of boxes."""
    return average_precision(greedy_match(dets, gts, iou_thresh))


def bucket_of(x: float, y: float) -> str:
    dist = float(np.hypot(x, y))
    for name, lo, hi in RANGE_BUCKETS:
        if lo <= dist < hi:
            return name
    return RANGE_BUCKETS[-1][0]


def split_by_range(items: Sequence) -> Dict[str, List]:
    """Partition boxes or detections by their distance from the ego origin."""
    buckets: Dict[str, List] = {name: [] for name, _, _ in RANGE_BUCKETS}
    for item in items:
        buckets[bucket_of(item.x, item.y)].append(item)
    return buckets


def dataset_ap(per_frame: Sequence[Tuple[Sequence, Sequence[Box2D]]], iou_thresh: float,
               bucket: Optional[str] = None) -> float:
    """
    AP over many frames, optionally restricted to one range bucket (both the
    ground truth and the detections are bucketed by their own distance).
    """
    total = MatchResult.empty()
    for dets, gts in per_frame:
        if bucket is not None:
            dets = split_by_range(dets)[bucket]
            gts = split_by_range(gts)[bucket]
        total = total.extend(greedy_match(list(dets), list(gts), iou_thresh))
    return average_precision(total)
