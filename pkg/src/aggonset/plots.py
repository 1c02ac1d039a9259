"""Matplotlib figure rendering for evaluation reports.

Figures are written as SVG with a fixed hash salt and no date metadata so
that identical reports produce byte-identical files.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_SAVE_KWARGS = {"format": "svg", "metadata": {"Date": None}, "bbox_inches": "tight"}

_SUBSET_COLORS = {
    "temporal": "#4c72b0",
    "physical": "#dd8452",
    "physiological": "#55a868",
    "physical+physiological": "#c44e52",
    "all": "#8172b3",
}


def _new_figure(width=5.0, height=4.0):
    plt.rcParams["svg.hashsalt"] = "aggonset"
    return plt.subplots(figsize=(width, height))


def save_roc_figure(cell, path) -> None:
    """Per-repeat ROC curves with the 90% band for one cell."""
    fig, ax = _new_figure()
    for i, curve in enumerate(cell.roc_per_repeat):
        ax.plot(curve.fpr, curve.tpr, color="#888888", lw=0.8, alpha=0.6,
                label="repetitions" if i == 0 else None)
    band = cell.band
    if band is not None:
        ax.fill_between(band.fpr_grid, band.tpr_lower, band.tpr_upper,
                        color="#4c72b0", alpha=0.25, lw=0,
                        label=f"{band.level:.0%} band")
        ax.plot(band.fpr_grid, band.tpr_mean, color="#4c72b0", lw=1.8, label="mean")
    ax.plot([0, 1], [0, 1], color="#333333", ls=":", lw=0.8)
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_xlim(0, 1)
    ax.set_ylim(0, 1.02)
    title = cell.key.slug().replace("_", " ")
    if cell.auc_mean is not None:
        title += f"  (AUC {cell.auc_mean:.3f})"
    ax.set_title(title, fontsize=9)
    ax.legend(loc="lower right", fontsize=8)
    ax.grid(alpha=0.3)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def save_sweep_figure(cells, x_of, xlabel, path) -> None:
    """Mean AUC versus a swept parameter, min/max error bars across repetitions.

    One line per (scheme, subset) pair present among the cells.
    """
    groups: dict = {}
    for c in cells:
        if c.status != "ok" or c.auc_mean is None:
            continue
        groups.setdefault((c.key.scheme.value, c.key.subset.value), []).append(c)
    fig, ax = _new_figure(6.0, 4.0)
    for (scheme, subset), items in sorted(groups.items()):
        items.sort(key=lambda c: x_of(c))
        xs = [x_of(c) for c in items]
        ys = [c.auc_mean for c in items]
        lo = [c.auc_mean - c.auc_min for c in items]
        hi = [c.auc_max - c.auc_mean for c in items]
        color = _SUBSET_COLORS.get(subset)
        ls = {"global": "-", "person_dependent": "--", "k_hybrid": "-."}.get(scheme, "-")
        ax.errorbar(xs, ys, yerr=[lo, hi], marker="o", ms=3.5, lw=1.4, ls=ls,
                    color=color, capsize=2.5, label=f"{scheme}, {subset}")
    ax.set_xlabel(xlabel)
    ax.set_ylabel("AUC")
    ax.axhline(0.5, color="#333333", ls=":", lw=0.8)
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
