"""Detection metrics, pipelines and reports."""

from macp.geom.iou import rotated_iou
from macp.evaluation.metrics import (
    IOU_THRESHOLDS,
    RANGE_BUCKETS,
    MatchResult,
    greedy_match,
    average_precision,
    match_and_ap,
    bucket_of,
    split_by_range,
    dataset_ap,
)
from macp.evaluation.pipelines import PipelineMode, PipelineOptions, run_frame
from macp.evaluation.report import EvalReport, DetectionEvaluator, evaluate, compare_reports

__all__ = [
    'rotated_iou',
    'IOU_THRESHOLDS',
    'RANGE_BUCKETS',
    'MatchResult',
    'greedy_match',
    'average_precision',
    'match_and_ap',
    'bucket_of',
    'split_by_range',
    'dataset_ap',
    'PipelineMode',
    'PipelineOptions',
    'run_frame',
    'EvalReport',
    'DetectionEvaluator',
    'evaluate',
    'compare_reports',
]
