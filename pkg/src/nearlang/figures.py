"""Matplotlib renderings written next to the delimited report outputs."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import DistanceMatrix, OverlapMatrix
from .evaluation import ConfusionMatrix


def _annotated_heatmap(labels: Sequence[str], values: np.ndarray, fmt: str, title: str, path: Path) -> None:
    n = len(labels)
    side = max(4.0, 1.2 + 0.8 * n)
    fig, ax = plt.subplots(figsize=(side, side))
    im = ax.imshow(values, cmap="viridis")
    ax.set_xticks(range(n), labels, rotation=45, ha="right")
    ax.set_yticks(range(n), labels)
    mid = (np.nanmax(values) + np.nanmin(values)) / 2 if n else 0
    for i in range(n):
        for j in range(n):
            color = "white" if values[i, j] < mid else "black"
            ax.text(j, i, format(values[i, j], fmt), ha="center", va="center", color=color, fontsize=9)
    ax.set_title(title)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_confusion_heatmap(cm: ConfusionMatrix, path: str | Path) -> None:
    _annotated_heatmap(cm.labels, cm.counts.astype(float), ".0f", "Confusion matrix (rows = actual)", Path(path))


def save_overlap_heatmap(matrix: OverlapMatrix, path: str | Path) -> None:
    _annotated_heatmap(matrix.labels, matrix.counts.astype(float), ".0f", "Lexical overlap (shared unique tokens)", Path(path))


def save_distance_heatmap(matrix: DistanceMatrix, path: str | Path) -> None:
    title = "Average edit distance"
    if matrix.variant == "length_controlled":
        title += " (length-controlled)"
    _annotated_heatmap(matrix.labels, matrix.values, ".3f", title, Path(path))


def save_grid_curve(per_c: Sequence[tuple[float, float]], best_c: float, path: str | Path) -> None:
    """Mean cross-validation accuracy against C on a log axis."""
    cs = [c for c, _ in per_c]
    accs = [a for _, a in per_c]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(cs, accs, marker="o")
    ax.axvline(best_c, color="tab:red", linestyle="--", label=f"best C = {best_c:g}")
    ax.set_xscale("log")
    ax.set_xlabel("C")
    ax.set_ylabel("mean CV accuracy")
    ax.set_title("Grid search")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_sweep_bars(names: Sequence[str], accuracies: Sequence[float], path: str | Path) -> None:
    """Test accuracy per feature set."""
    fig, ax = plt.subplots(figsize=(max(6.0, 0.6 * len(names)), 4))
    ax.bar(range(len(names)), accuracies, color="tab:blue")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right")
    ax.set_ylabel("test accuracy (%)")
    ax.set_ylim(0, 100)
    for i, acc in enumerate(accuracies):
        ax.text(i, acc + 0.5, f"{acc:.1f}", ha="center", fontsize=8)
    ax.set_title("Feature-set sweep")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
