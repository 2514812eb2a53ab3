"""Matplotlib rendering for the report path.

Figures are written next to the delimited outputs: connectivity heatmaps
(lighter means a stronger inferred connection, matching the PGM export),
per-fold breakdowns for a single report, and the cross-method comparison
bars. All functions render straight to file with the Agg backend.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_score_heatmap(score_matrix, path, title=None):
    scores = score_matrix.scores if hasattr(score_matrix, "scores") else np.asarray(score_matrix)
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    image = ax.imshow(scores, cmap="gray", vmin=0.0, vmax=1.0, interpolation="nearest")
    ax.set_xlabel("target neuron")
    ax.set_ylabel("source neuron")
    if title:
        ax.set_title(title)
    fig.colorbar(image, ax=ax, label="connection score")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_fold_breakdown(report, path):
    """Per-fold AUC and PRC bars for one evaluation report."""
    names = [str(fold[0]) for fold in report.per_fold]
    auc = [fold[1] for fold in report.per_fold]
    prc = [fold[2] for fold in report.per_fold]
    x = np.arange(len(names))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(5.0, 0.9 * len(names) + 2.0), 3.6))
    ax.bar(x - width / 2, auc, width, label="AUC", color="#3465a4")
    ax.bar(x + width / 2, prc, width, label="PRC", color="#f57900")
    ax.axhline(report.auc, color="#3465a4", lw=0.8, ls="--")
    ax.axhline(report.prc, color="#f57900", lw=0.8, ls="--")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0, 1.02)
    ax.set_ylabel("area")
    ax.set_title(f"{report.method_tag}: per-network performance")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_method_comparison(reports, path):
    """Grouped AUC/PRC bars across methods, annotated with fold time."""
    names = [r.method_tag for r in reports]
    auc = [r.auc for r in reports]
    prc = [r.prc for r in reports]
    secs = [r.wall_clock_seconds for r in reports]
    x = np.arange(len(names))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(5.0, 1.3 * len(names) + 2.0), 4.0))
    ax.bar(x - width / 2, auc, width, label="AUC", color="#3465a4")
    ax.bar(x + width / 2, prc, width, label="PRC", color="#f57900")
    for xi, (a, s) in enumerate(zip(auc, secs)):
        ax.annotate(f"{s:.1f}s", (xi, min(a + 0.03, 0.97)), ha="center", fontsize=8,
                    color="#555555")
    ax.set_xticks(x)
    ax.set_xticklabels(names)
    ax.set_ylim(0, 1.05)
    ax.set_ylabel("mean area over folds")
    ax.set_title("method comparison (label: mean seconds per fold)")
    ax.legend(frameon=False)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
