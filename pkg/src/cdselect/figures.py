"""Matplotlib renderings of reports: CDS histograms, bin occupancy,
and the accuracy-vs-budget strategy comparison. Headless backend only."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

MAX_BARS = 32


def histogram_figure(histogram: list[dict], path, title: str = "CDS histogram") -> None:
    """Bar chart of signature counts, largest first, truncated to MAX_BARS."""
    top = histogram[:MAX_BARS]
    counts = [rec["count"] for rec in top]
    labels = [rec["bits"] for rec in top]
    fig, ax = plt.subplots(figsize=(max(4, 0.3 * len(top) + 2), 3.2))
    ax.bar(range(len(top)), counts, color="#4878cf")
    ax.set_xticks(range(len(top)))
    fontsize = 7 if top and len(labels[0]) <= 12 else 5
    ax.set_xticklabels(labels, rotation=90, fontsize=fontsize, family="monospace")
    ax.set_ylabel("count")
    ax.set_title(title)
    if len(histogram) > MAX_BARS:
        ax.annotate(f"(+{len(histogram) - MAX_BARS} more types)",
                    xy=(0.98, 0.95), xycoords="axes fraction", ha="right", fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def bins_figure(per_class: list[dict], path) -> None:
    """Distance-bin occupancy of the coreset, one line per group."""
    fig, ax = plt.subplots(figsize=(5, 3.2))
    for rec in per_class:
        xs = [b["bin"] for b in rec["bins"]]
        ys = [b["count"] for b in rec["bins"]]
        name = "all" if rec["class"] is None else f"class {rec['class']}"
        ax.plot(xs, ys, marker="o", markersize=3, label=name)
    ax.set_xlabel("distance bin")
    ax.set_ylabel("selected samples")
    ax.set_title("coreset bin occupancy")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def strategy_curve_figure(results, path) -> None:
    """Mean accuracy against budget per method, error bars = std over seeds."""
    methods = []
    for res in results:
        if res.method not in methods:
            methods.append(res.method)
    budgets = sorted({res.budget for res in results})

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for method in methods:
        means, stds = [], []
        for b in budgets:
            accs = [r.accuracy for r in results
                    if r.method == method and r.budget == b]
            means.append(float(np.mean(accs)))
            stds.append(float(np.std(accs)))
        ax.errorbar([100 * b for b in budgets], means, yerr=stds,
                    marker="o", markersize=3, capsize=2, label=method)
    ax.set_xlabel("budget (% of class)")
    ax.set_ylabel("nearest-centroid accuracy")
    ax.set_title("sampling-strategy comparison")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
