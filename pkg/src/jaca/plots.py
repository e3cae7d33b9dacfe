"""Report figures written next to the delimited outputs."""

from __future__ import annotations

import numpy as np
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt


def save_cv_heatmap(cv, path):
    """Mean criterion over the (rho, epsilon) grid, selected cell marked."""
    fig, ax = plt.subplots(figsize=(7, 4))
    surface = np.where(np.isfinite(cv.criterion), cv.criterion, np.nan)
    im = ax.imshow(surface, aspect="auto", origin="lower", cmap="viridis")
    ax.set_xticks(range(len(cv.epsilon_grid)))
    ax.set_xticklabels([f"{e:.3g}" for e in cv.epsilon_grid], rotation=60,
                       fontsize=7)
    ax.set_yticks(range(len(cv.rho_grid)))
    ax.set_yticklabels([f"{r:g}" for r in cv.rho_grid])
    ax.set_xlabel("epsilon (fraction of critical penalty)")
    ax.set_ylabel("rho")
    ri = int(np.where(cv.rho_grid == cv.best_rho)[0][0])
    ei = int(np.where(cv.epsilon_grid == cv.best_epsilon)[0][0])
    ax.scatter([ei], [ri], marker="o", s=80, facecolor="none", edgecolor="red")
    ax.set_title("cross-validation criterion")
    fig.colorbar(im, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_objective_trace(trace, path):
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.plot(np.arange(len(trace)), trace, marker=".", lw=1)
    ax.set_xlabel("sweep")
    ax.set_ylabel("objective")
    ax.set_title("coordinate-descent objective")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_metric_bars(errors, cardinality, path):
    """Misclassification per view subset and selected rows per view."""
    fig, axes = plt.subplots(1, 2, figsize=(9, 3.5))
    names = list(errors)
    axes[0].bar(names, [100 * errors[k] for k in names], color="#31688e")
    axes[0].set_ylabel("misclassification (%)")
    axes[0].tick_params(axis="x", rotation=30)
    views = [f"view {d + 1}" for d in range(len(cardinality))]
    axes[1].bar(views, cardinality, color="#35b779")
    axes[1].set_ylabel("selected rows")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
