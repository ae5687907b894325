"""
PEFT Ablation Study

Fine-tunes every adaptation variant on the same pretrained detector and
cooperative split, then compares accuracy against the share of parameters
each variant trains:
- full: every parameter trainable
- head: fusion block and output heads only
- adapter: + residual bottleneck adapters in the prediction net
- ssf: + scale-shift modules
- conada: + convolutional adapters in the encoder
- macp: ConAda + SSF + fusion block + heads

Output:
- ablation_comparison.csv (one row per variant)
- one EvalReport JSON per variant
- ABLATION_REPORT.md
- ablation_plots.png (when matplotlib is installed)

Usage:
    python experiments/ablation_study.py --config experiments/configs/desk.json \
        --data runs/desk --pretrained runs/desk/pretrained.ckpt
"""

import argparse
import logging
import os
import sys
from pathlib import Path
from typing import List

# Add parent directory to path
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from macp.config import load_config, save_resolved_config
from macp.evaluation import EvalReport, PipelineMode, compare_reports, evaluate
from macp.peft import Variant
from macp.protocol import eval_options, finetune_variant, pretrain_model
from macp.scenarios import load_dataset
from macp.training import load_model


ABLATION_VARIANTS = [
    {"variant": Variant.FULL, "description": "Full fine-tuning"},
    {"variant": Variant.HEAD, "description": "Fusion block and heads only"},
    {"variant": Variant.ADAPTER, "description": "+ Houlsby adapters"},
    {"variant": Variant.SSF, "description": "+ SSF"},
    {"variant": Variant.CONADA, "description": "+ ConAda"},
    {"variant": Variant.MACP, "description": "ConAda + SSF (MACP)"},
]


def run_ablation_study(cfg, data_dir: str, pretrained: str, save_dir: str, epochs: int = None) -> List[EvalReport]:
    data = Path(data_dir)
    train = load_dataset(data / "train")
    test = load_dataset(data / "test")
    seed = cfg["seed"]
    if pretrained:
        base, _ = load_model(pretrained)
    else:
        print("No --pretrained checkpoint, pretraining first")
        base = pretrain_model(cfg, load_dataset(data / "pretrain"), seed).model

    print("\n" + "=" * 70)
    print("ABLATION STUDY: Parameter-Efficient Fine-Tuning Variants")
    print("=" * 70)
    print(f"\nTrain frames: {len(train)}  Test frames: {len(test)}  Seed: {seed}")
    for i, entry in enumerate(ABLATION_VARIANTS, 1):
        print(f"  {i}. {entry['variant'].value}: {entry['description']}")
    print("\n" + "=" * 70 + "\n")

    save_path = Path(save_dir)
    save_path.mkdir(parents=True, exist_ok=True)
    reports = []
    for entry in ABLATION_VARIANTS:
        name = entry["variant"].value
        print(f"\n{'=' * 70}\nRunning: {name}\n{'=' * 70}\n")
        trainer = finetune_variant(cfg, base.named_params(), train, seed, entry["variant"], epochs=epochs)
        report = evaluate(test, trainer.model, PipelineMode.MACP, eval_options(cfg), name=name)
        report.save_to_json(save_path / f"{name}_report.json")
        reports.append(report)

    compare_reports(reports, save_path / "ablation_comparison.csv")
    generate_ablation_report(reports, save_path)
    plot_ablation_results(reports, save_path)
    return reports


def generate_ablation_report(reports: List[EvalReport], save_dir: Path) -> None:
    """Markdown table of accuracy against trainable share."""
    report_path = Path(save_dir) / "ABLATION_REPORT.md"
    full = next((r for r in reports if r.name == Variant.FULL.value), None)
    with open(report_path, "w") as f:
        f.write("# PEFT Ablation Report\n\n")
        f.write("| Variant | AP@0.5 | AP@0.7 | Trainable | Total | Trainable (%) |\n")
        f.write("|---------|--------|--------|-----------|-------|---------------|\n")
        for r in reports:
            share = 100.0 * r.params_trainable / max(1, r.params_total)
            f.write(f"| {r.name} | {r.ap_at(0.5) * 100:.1f} | {r.ap_at(0.7) * 100:.1f} | "
                    f"{r.params_trainable} | {r.params_total} | {share:.1f} |\n")
        if full is not None and full.ap_at(0.5) > 0:
            f.write("\n## Relative to full fine-tuning (AP@0.5)\n\n")
            for r in reports:
                f.write(f"- **{r.name}**: {100.0 * r.ap_at(0.5) / full.ap_at(0.5):.1f}%\n")
    print(f"Ablation report saved to: {report_path}")


def plot_ablation_results(reports: List[EvalReport], save_dir: Path) -> None:
    """Bar charts of AP and trainable share per variant."""
    try:
        import matplotlib
        matplotlib.use('Agg')  # Non-interactive backend
        import matplotlib.pyplot as plt
    except ImportError:
        print("Warning: matplotlib not available, skipping plots")
        return

    names = [r.name for r in reports]
    x = range(len(names))
    fig, axes = plt.subplots(1, 2, figsize=(14, 5))
    fig.suptitle('PEFT Ablation', fontsize=16, fontweight='bold')

    ax = axes[0]
    width = 0.4
    ax.bar([i - width / 2 for i in x], [r.ap_at(0.5) * 100 for r in reports], width, label='AP@0.5',
           alpha=0.7, color='#2ecc71')
    ax.bar([i + width / 2 for i in x], [r.ap_at(0.7) * 100 for r in reports], width, label='AP@0.7',
           alpha=0.7, color='#3498db')
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, fontsize=9)
    ax.set_ylabel('AP (%)', fontweight='bold')
    ax.set_title('Accuracy per Variant')
    ax.legend()
    ax.grid(axis='y', alpha=0.3)

    ax = axes[1]
    shares = [100.0 * r.params_trainable / max(1, r.params_total) for r in reports]
    ax.bar(x, shares, alpha=0.7, color='#e74c3c')
    ax.set_xticks(list(x))
    ax.set_xticklabels(names, fontsize=9)
    ax.set_ylabel('Trainable Parameters (%)', fontweight='bold')
    ax.set_title('Trainable Share per Variant')
    ax.grid(axis='y', alpha=0.3)

    plt.tight_layout()
    plot_path = Path(save_dir) / "ablation_plots.png"
    plt.savefig(plot_path, dpi=150, bbox_inches='tight')
    plt.close()
    print(f"Ablation plots saved to: {plot_path}")


def main():
    parser = argparse.ArgumentParser(description="PEFT ablation over the six adaptation variants")
    parser.add_argument("--config", type=str, default=None, help="JSON config merged over the defaults")
    parser.add_argument("--data", type=str, required=True, help="Directory holding pretrain/train/test splits")
    parser.add_argument("--pretrained", type=str, default=None, help="Pretrained checkpoint")
    parser.add_argument("--epochs", type=int, default=None, help="Fine-tuning epochs per variant")
    parser.add_argument("--save-dir", type=str, default="experiments/results/ablation", help="Save directory")
    args = parser.parse_args()

    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    cfg = load_config(args.config)
    save_resolved_config(cfg, args.save_dir)
    run_ablation_study(cfg, args.data, args.pretrained, args.save_dir, args.epochs)

    print("\n" + "=" * 70)
    print("ABLATION STUDY COMPLETE!")
    print("=" * 70)
    print(f"\nResults saved to: {args.save_dir}")


if __name__ == "__main__":
    main()
