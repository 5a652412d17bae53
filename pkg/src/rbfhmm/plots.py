"""Static SVG figures for run artifacts.

Matplotlib is imported lazily with the Agg backend; the SVG hash salt and
metadata are pinned so identical inputs produce identical files.
"""

from __future__ import annotations

import numpy as np


def _pyplot():
    import matplotlib

    matplotlib.use("Agg", force=False)
    matplotlib.rcParams["svg.hashsalt"] = "rbfhmm"
    import matplotlib.pyplot as plt

    return plt


def _save(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None})
    _pyplot().close(fig)


def transition_heatmap(trans, path, title: str = "transition matrix") -> None:
    plt = _pyplot()
    trans = np.asarray(trans, dtype=float)
    fig, ax = plt.subplots(figsize=(4.2, 3.8))
    im = ax.imshow(trans, cmap="gray_r", vmin=0.0, vmax=1.0)
    ax.set_title(title)
    ax.set_xlabel("to state")
    ax.set_ylabel("from state")
    fig.colorbar(im, ax=ax, shrink=0.85)
    fig.tight_layout()
    _save(fig, path)


def accuracy_curve(fractions, accuracies, path, label: str = "balanced accuracy") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    ax.semilogx(fractions, accuracies, marker="o")
    ax.set_xlabel("training fraction")
    ax.set_ylabel(label)
    ax.set_ylim(0.0, 1.05)
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    _save(fig, path)


def confidence_bars(histogram: dict, path) -> None:
    """Side-by-side per-class confidence histograms (one bar set per class)."""
    plt = _pyplot()
    edges = np.asarray(histogram["bin_edges"])
    centers = 0.5 * (edges[:-1] + edges[1:])
    width = 0.9 * np.diff(edges).min() / max(len(histogram["classes"]), 1)
    fig, ax = plt.subplots(figsize=(5.0, 3.5))
    for i, (name, payload) in enumerate(sorted(histogram["classes"].items())):
        if payload["empty"]:
            continue
        ax.bar(centers + (i - 0.5) * width, payload["mass"], width=width, label=name)
    ax.set_xlabel("confidence in positive class")
    ax.set_ylabel("probability")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def trace_plot(values, path, ylabel: str = "log likelihood") -> None:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.0, 3.0))
    ax.plot(np.asarray(values, dtype=float))
    ax.set_xlabel("sweep")
    ax.set_ylabel(ylabel)
    fig.tight_layout()
    _save(fig, path)
