"""
Fusion Benchmark

Compares No Fusion, Early Fusion and Late Fusion (all with the pretrained
single-agent detector) against intermediate MACP fusion with a fine-tuned
model, on one cooperative test split. Reports AP by range bucket and the
average bytes each scheme sends per frame.

Usage:
    python experiments/fusion_benchmark.py --data runs/desk/test \
        --pretrained runs/desk/pretrained.ckpt --macp runs/desk/finetune_macp.ckpt
"""

import argparse
import logging
import os
import sys
from pathlib import Path

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from macp.config import load_config, save_resolved_config
from macp.evaluation import PipelineMode, compare_reports, evaluate
from macp.protocol import eval_options
from macp.scenarios import load_dataset
from macp.training import load_model


def run_benchmark(cfg, data_dir: str, pretrained: str, macp_checkpoint: str, save_dir: str):
    frames = load_dataset(data_dir)
    single, _ = load_model(pretrained)
    coop, _ = load_model(macp_checkpoint)
    options = eval_options(cfg)
    save_path = Path(save_dir)
    save_path.mkdir(parents=True, exist_ok=True)

    print("\n" + "=" * 70)
    print(f"FUSION BENCHMARK: {len(frames)} cooperative frames")
    print("=" * 70)

    reports = []
    for mode, model in ((PipelineMode.NO_FUSION, single), (PipelineMode.EARLY_FUSION, single),
                        (PipelineMode.LATE_FUSION, single), (PipelineMode.MACP, coop)):
        report = evaluate(frames, model, mode, options)
        report.save_to_csv(save_path / f"{mode.value}.csv")
        print(report)
        reports.append(report)

    return compare_reports(reports, save_path / "fusion_comparison.csv")


def main():
    parser = argparse.ArgumentParser(description="No/Early/Late/MACP fusion benchmark")
    parser.add_argument("--config", type=str, default=None, help="JSON config merged over the defaults")
    parser.add_argument("--data", type=str, required=True, help="Cooperative test dataset")
    parser.add_argument("--pretrained", type=str, required=True, help="Pretrained single-agent checkpoint")
    parser.add_argument("--macp", type=str, required=True, help="Fine-tuned MACP checkpoint")
    parser.add_argument("--save-dir", type=str, default="experiments/results/fusion", help="Save directory")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    cfg = load_config(args.config)
    save_resolved_config(cfg, args.save_dir)
    run_benchmark(cfg, args.data, args.pretrained, args.macp, args.save_dir)
    print(f"\nResults saved to: {args.save_dir}")


if __name__ == "__main__":
    main()
