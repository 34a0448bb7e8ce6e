#!/usr/bin/env python3
"""Plot running-average reward and constraint curves from cmdp_lab outputs.

    tools/plot_curves.py results/queue                 # one run directory
    tools/plot_curves.py results/sweep/K_0 results/sweep/K_1x --out curves.png

Each directory must contain aggregate.csv; summary.json (if present) supplies
the oracle value and the legend's K.
"""

import argparse
import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd


def load(run_dir: Path):
    frame = pd.read_csv(run_dir / "aggregate.csv")
    summary_path = run_dir / "summary.json"
    summary = json.loads(summary_path.read_text()) if summary_path.exists() else {}
    return frame, summary


def band(ax, frame, column, label):
    mean = frame[f"{column}_mean"]
    std = frame[f"{column}_std"]
    (line,) = ax.plot(frame["t"], mean, label=label)
    ax.fill_between(frame["t"], mean - std, mean + std, color=line.get_color(), alpha=0.2)


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("runs", nargs="+", type=Path, help="run directories containing aggregate.csv")
    parser.add_argument("--out", type=Path, default=None, help="output image (default: <first run>/curves.png)")
    args = parser.parse_args()

    loaded = [(run, *load(run)) for run in args.runs]
    n_costs = sum(1 for c in loaded[0][1].columns if c.startswith("avg_cost_") and c.endswith("_mean"))
    cost_names = loaded[0][2].get("environment", {}).get("cost_labels", [])

    fig, axes = plt.subplots(1, 1 + n_costs, figsize=(5 * (1 + n_costs), 4), squeeze=False)
    axes = axes[0]
    for run, frame, summary in loaded:
        k = summary.get("learner", {}).get("K")
        label = f"{run.name} (K={k:.4g})" if k is not None else run.name
        band(axes[0], frame, "avg_reward", label)
        for i in range(n_costs):
            band(axes[1 + i], frame, f"avg_cost_{i + 1}", label)

    lambda_star = loaded[0][2].get("oracle", {}).get("lambda_star")
    if lambda_star is not None:
        axes[0].axhline(lambda_star, color="black", linestyle="--", linewidth=1, label=f"LP optimum {lambda_star:.4f}")
    axes[0].set_title("running-average reward")
    for i in range(n_costs):
        axes[1 + i].axhline(0.0, color="black", linestyle="--", linewidth=1)
        title = cost_names[i] if i < len(cost_names) else f"cost {i + 1}"
        axes[1 + i].set_title(f"running-average {title}")
    for ax in axes:
        ax.set_xlabel("t")
        ax.set_xscale("log")
        ax.legend(fontsize=8)
    fig.tight_layout()

    out = args.out or (args.runs[0] / "curves.png")
    fig.savefig(out, dpi=120)
    print(out)


if __name__ == "__main__":
    main()
