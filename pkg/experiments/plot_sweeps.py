"""
Plot the CSV tables written by ``macp sweep`` and ``macp diag-shift``.

Looks for these files in a run directory and plots whichever exist:
- sweep_compression.csv: AP and bytes per frame against the compression factor
- sweep_cavs.csv: AP against the number of participating agents
- sweep_fusion.csv: AP per fusion method
- sweep_robustness_positions.csv: AP per mask position, both models
- signed_range_histogram.csv: ego vs surrounding point distributions

Usage:
    python experiments/plot_sweeps.py --run runs/desk
"""

import argparse
import sys
from pathlib import Path

import pandas as pd


def _plot_compression(ax, df: pd.DataFrame) -> None:
    ax.plot(df["factor"], df["ap50"] * 100, marker="o", color="#2ecc71", label="AP@0.5")
    ax.plot(df["factor"], df["ap70"] * 100, marker="s", color="#3498db", label="AP@0.7")
    ax.set_xscale("log", base=2)
    ax.set_xlabel("Compression factor", fontweight="bold")
    ax.set_ylabel("AP (%)", fontweight="bold")
    twin = ax.twinx()
    twin.plot(df["factor"], df["am_mb"], linestyle="--", color="#7f8c8d", label="AM")
    twin.set_ylabel("MB per frame")
    ax.set_title("Accuracy vs Compression")
    ax.legend(loc="lower left")
    ax.grid(alpha=0.3)


def _plot_cavs(ax, df: pd.DataFrame) -> None:
    ax.plot(df["max_agents"], df["ap50"] * 100, marker="o", color="#2ecc71", label="AP@0.5")
    ax.plot(df["max_agents"], df["ap70"] * 100, marker="s", color="#3498db", label="AP@0.7")
    ax.set_xticks(list(df["max_agents"]))
    ax.set_xlabel("Max agents", fontweight="bold")
    ax.set_ylabel("AP (%)", fontweight="bold")
    ax.set_title("Accuracy vs Participating Agents")
    ax.legend()
    ax.grid(alpha=0.3)


def _plot_fusion(ax, df: pd.DataFrame) -> None:
    x = range(len(df))
    ax.bar([i - 0.2 for i in x], df["ap50"] * 100, 0.4, alpha=0.7, color="#2ecc71", label="AP@0.5")
    ax.bar([i + 0.2 for i in x], df["ap70"] * 100, 0.4, alpha=0.7, color="#3498db", label="AP@0.7")
    ax.set_xticks(list(x))
    ax.set_xticklabels(df["method"])
    ax.set_ylabel("AP (%)", fontweight="bold")
    ax.set_title("Fusion Methods")
    ax.legend()
    ax.grid(axis="y", alpha=0.3)


def _plot_robustness(ax, df: pd.DataFrame) -> None:
    for label, color in (("single", "#e74c3c"), ("cooperative", "#2ecc71")):
        part = df[df["model"] == label].reset_index(drop=True)
        ax.plot(part.index, part["ap50"] * 100, marker="o", color=color,
                label=f"{label} (std {part['ap50'].std() * 100:.2f})")
    ax.set_xlabel("Mask position", fontweight="bold")
    ax.set_ylabel("AP@0.5 (%)", fontweight="bold")
    ax.set_title("Sliding FOV Mask")
    ax.legend()
    ax.grid(alpha=0.3)


def _plot_histogram(ax, df: pd.DataFrame) -> None:
    for role, color in (("ego", "#3498db"), ("surrounding", "#e67e22")):
        part = df[df["role"] == role]
        centers = 0.5 * (part["bin_left"] + part["bin_right"])
        ax.step(centers, part["density"], where="mid", color=color, label=role)
    ax.axvline(0, color="black", linewidth=0.5)
    ax.set_xlabel("Signed range to ego (m)", fontweight="bold")
    ax.set_ylabel("Share of points", fontweight="bold")
    ax.set_title("Point Distribution by Role")
    ax.legend()
    ax.grid(alpha=0.3)


PLOTS = [
    ("sweep_compression.csv", _plot_compression),
    ("sweep_cavs.csv", _plot_cavs),
    ("sweep_fusion.csv", _plot_fusion),
    ("sweep_robustness_positions.csv", _plot_robustness),
    ("signed_range_histogram.csv", _plot_histogram),
]


def plot_run(run_dir: str) -> Path:
    """Write sweep_plots.png for every table found in ``run_dir``."""
    import matplotlib
    matplotlib.use('Agg')  # Non-interactive backend
    import matplotlib.pyplot as plt

    run = Path(run_dir)
    found = [(name, fn) for name, fn in PLOTS if (run / name).exists()]
    if not found:
        raise FileNotFoundError(f"no sweep tables in {run}")

    fig, axes = plt.subplots(1, len(found), figsize=(6 * len(found), 5), squeeze=False)
    for ax, (name, fn) in zip(axes[0], found):
        fn(ax, pd.read_csv(run / name))
        print(f"  plotted {name}")
    plt.tight_layout()
    plot_path = run / "sweep_plots.png"
    plt.savefig(plot_path, dpi=150, bbox_inches='tight')
    plt.close()
    return plot_path


def main():
    parser = argparse.ArgumentParser(description="Plot sweep and diagnostic tables of a run")
    parser.add_argument("--run", type=str, required=True, help="Run directory holding the CSV tables")
    args = parser.parse_args()
    try:
        path = plot_run(args.run)
    except ImportError:
        print("Warning: matplotlib not available, install the 'vis' extra")
        sys.exit(1)
    print(f"\nPlots saved to: {path}")


if __name__ == "__main__":
    main()
