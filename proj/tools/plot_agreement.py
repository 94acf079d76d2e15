#!/usr/bin/env python3
"""Heatmaps of the mean agreement matrices in a report's agreement.json."""
import argparse
import json
import pathlib

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np


def matrix(cells):
    return np.array([[np.nan if c is None else c for c in row] for row in cells], dtype=float)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("agreement", type=pathlib.Path)
    parser.add_argument("--out", type=pathlib.Path, default=pathlib.Path("plots"))
    args = parser.parse_args()

    data = json.loads(args.agreement.read_text())
    args.out.mkdir(parents=True, exist_ok=True)
    for variant, summary in data.items():
        names = summary["explainers"]
        metrics = summary["metrics"]
        fig, axes = plt.subplots(2, 3, figsize=(13, 8))
        for ax, (metric, cells) in zip(axes.flat, metrics.items()):
            m = matrix(cells)
            im = ax.imshow(m, vmin=-1 if metric == "rank_correlation" else 0, vmax=1, cmap="viridis")
            ax.set_title(metric)
            ax.set_xticks(range(len(names)), names, rotation=45)
            ax.set_yticks(range(len(names)), names)
            for i in range(len(names)):
                for j in range(len(names)):
                    if np.isnan(m[i, j]):
                        ax.text(j, i, "NA", ha="center", va="center", color="gray", fontsize=8)
                    else:
                        ax.text(j, i, f"{m[i, j]:.2f}", ha="center", va="center", color="w", fontsize=8)
            fig.colorbar(im, ax=ax, fraction=0.046)
        fig.suptitle(f"{variant} (n = {summary['n']})")
        fig.tight_layout()
        path = args.out / f"agreement_{variant}.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        print(path)


if __name__ == "__main__":
    main()
