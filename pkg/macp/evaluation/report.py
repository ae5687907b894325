"""
Evaluation reports and the dataset-level evaluator.

Usage:
    evaluator = DetectionEvaluator(frames)
    report = evaluator.evaluate(model, mode="macp", name="macp-f4")
    report.save_to_json("results/macp.json")
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import pandas as pd

from macp.comms.channel import ChannelStats, am_megabytes
from macp.errors import MissingArtifactError
from macp.evaluation.metrics import IOU_THRESHOLDS, RANGE_BUCKETS, dataset_ap
from macp.evaluation.pipelines import PipelineMode, PipelineOptions, run_frame
from macp.peft.variants import count_params
from macp.perception.detections import Detection, write_detections

logger = logging.getLogger(__name__)

CSV_COLUMNS = ["mode", "iou", "bucket", "ap", "am_mb", "params_total", "params_trainable"]


@dataclass
class EvalReport:
    """AP per IoU threshold and range bucket, bytes on the channel and parameter counts."""
    mode: str
    name: str
    n_frames: int
    n_detections: int
    n_gts: int
    # {"0.5": {"overall": .., "0-10m": .., ...}, "0.7": {...}}
    ap: Dict[str, Dict[str, float]]
    am_mb: float
    params_total: int
    params_trainable: int
    timestamp: str = field(default_factory=lambda: time.strftime("%Y-%m-%d %H:%M:%S"))

    def ap_at(self, iou: float, bucket: str = "overall") -> float:
        return self.ap[f"{iou:.1f}"][bucket]

    def save_to_json(self, filepath: Union[str, Path]) -> None:
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, "w") as f:
            json.dump(asdict(self), f, indent=2)

    @staticmethod
    def load_from_json(filepath: Union[str, Path]) -> "EvalReport":
        if not Path(filepath).exists():
            raise MissingArtifactError(f"report not found: {filepath}")
        with open(filepath) as f:
            return EvalReport(**json.load(f))

    def to_frame(self) -> pd.DataFrame:
        rows = []
        for iou, buckets in self.ap.items():
            for bucket, value in buckets.items():
                rows.append({"mode": self.mode, "iou": float(iou), "bucket": bucket, "ap": value,
                             "am_mb": self.am_mb, "params_total": self.params_total,
                             "params_trainable": self.params_trainable})
        return pd.DataFrame(rows, columns=CSV_COLUMNS)

    def save_to_csv(self, filepath: Union[str, Path]) -> None:
        Path(filepath).parent.mkdir(parents=True, exist_ok=True)
        self.to_frame().to_csv(filepath, index=False)

    def __str__(self) -> str:
        lines = [
            "=" * 60,
            f"Evaluation Results: {self.name} ({self.mode})",
            "=" * 60,
            f"Frames: {self.n_frames}   GT boxes: {self.n_gts}   Detections: {self.n_detections}",
            "",
        ]
        for iou, buckets in self.ap.items():
            cells = "  ".join(f"{b}: {v * 100:5.1f}" for b, v in buckets.items())
            lines.append(f"  AP@{iou}  {cells}")
        lines += [
            "",
            f"  AM:               {self.am_mb:.4f} MB/frame",
            f"  Params:           {self.params_trainable:,} trainable / {self.params_total:,} total",
            "=" * 60,
        ]
        return "\n".join(lines)


class DetectionEvaluator:
    """
    Runs one pipeline over a fixed list of frames and scores it.

    Args:
        frames: Test frames, evaluated in the given order
        options: Pipeline thresholds, agent limit and FOV mask
    """

    def __init__(self, frames: Sequence, options: Optional[PipelineOptions] = None):
        self.frames = list(frames)
        self.options = options or PipelineOptions()
        self.detections: List[List[Detection]] = []

    def evaluate(self, model, mode="macp", name: Optional[str] = None) -> EvalReport:
        mode = PipelineMode.parse(mode)
        if model is None:
            raise MissingArtifactError(f"mode {mode.value} needs a trained model")
        per_frame = []
        stats = ChannelStats()
        for frame in self.frames:
            dets, frame_stats = run_frame(frame, mode, model, self.options)
            stats.merge(frame_stats)
            per_frame.append((dets, frame.gts))
        self.detections = [dets for dets, _ in per_frame]

        ap = {}
        for iou in IOU_THRESHOLDS:
            key = f"{iou:.1f}"
            ap[key] = {"overall": dataset_ap(per_frame, iou)}
            for bucket, _, _ in RANGE_BUCKETS:
                ap[key][bucket] = dataset_ap(per_frame, iou, bucket)
        total, trainable = count_params(model)
        report = EvalReport(
            mode=mode.value,
            name=name or mode.value,
            n_frames=len(self.frames),
            n_detections=sum(len(d) for d, _ in per_frame),
            n_gts=sum(len(g) for _, g in per_frame),
            ap=ap,
            am_mb=am_megabytes(stats, max(1, len(self.frames))),
            params_total=total,
            params_trainable=trainable,
        )
        logger.info("%s: AP@0.5 %.3f, AP@0.7 %.3f, AM %.4f MB", report.name,
                    report.ap_at(0.5), report.ap_at(0.7), report.am_mb)
        return report

    def save_detections(self, directory: Union[str, Path]) -> List[Path]:
        """Write the last run's detections, one JSON-lines file per frame id."""
        directory = Path(directory)
        return [write_detections(directory / f"frame_{frame.frame_id:05d}.jsonl", dets)
                for frame, dets in zip(self.frames, self.detections)]


def evaluate(frames: Sequence, model, mode="macp", options: Optional[PipelineOptions] = None,
             name: Optional[str] = None) -> EvalReport:
    """Run ``mode`` over ``frames`` and build the report."""
    return DetectionEvaluator(frames, options).evaluate(model, mode, name)


def compare_reports(reports: List[EvalReport], save_path: Optional[Union[str, Path]] = None) -> pd.DataFrame:
    """
    Side-by-side table of several reports.

    Args:
        reports: Reports to compare
        save_path: Optional CSV path for the table
    """
    data = []
    for r in reports:
        data.append({
            "Name": r.name,
            "Mode": r.mode,
            "AP@0.5": round(r.ap_at(0.5) * 100, 2),
            "AP@0.7": round(r.ap_at(0.7) * 100, 2),
            "AM (MB)": round(r.am_mb, 4),
            "Trainable": r.params_trainable,
            "Total": r.params_total,
            "Trainable (%)": round(100.0 * r.params_trainable / max(1, r.params_total), 2),
        })
    df = pd.DataFrame(data)

    print("\nComparison Table:")
    print("=" * 80)
    print(df.to_string(index=False))
    print("=" * 80)

    if save_path:
        Path(save_path).parent.mkdir(parents=True, exist_ok=True)
        df.to_csv(save_path, index=False)
        print(f"\nSaved to: {save_path}")
    return df
