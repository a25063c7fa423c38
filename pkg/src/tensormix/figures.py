"""Report figures rendered to image files next to the delimited outputs.

Every function takes already-computed report data, draws a single figure with
matplotlib's file-only backend, writes it to ``path`` and returns the path.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 150


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def dependence_figure(report, path):
    """Bar chart of pairwise divergence statistics with their null cutoffs."""
    labels = ["%s:%s" % (r["component1"], r["component2"]) for r in report]
    stats = [r["statistic"] for r in report]
    cuts = [r.get("null95") for r in report]
    colors = ["#c44e52" if r["dependent"] else "#4c72b0" for r in report]
    fig, ax = plt.subplots(figsize=(1.6 + 1.1 * len(report), 3.4))
    pos = np.arange(len(report))
    ax.bar(pos, stats, color=colors)
    for x, cut in zip(pos, cuts):
        if cut is not None:
            ax.hlines(cut, x - 0.45, x + 0.45, colors="black", linestyles="--")
    ax.set_xticks(pos, labels)
    ax.set_ylabel("mean divergence")
    ax.set_title("pairwise dependence (dashes: permutation 95% cutoff)")
    return _save(fig, path)


def benchmark_figure(rows, path):
    """Grouped bars of held-out losses per component and model."""
    components = sorted({r["component"] for r in rows})
    models = sorted({r["model"] for r in rows})
    loss = {(r["component"], r["model"]): r["loss"] for r in rows}
    chance = {r["component"]: r.get("chance") for r in rows}
    width = 0.8 / len(models)
    fig, ax = plt.subplots(figsize=(1.8 + 1.3 * len(components), 3.4))
    for k, model in enumerate(models):
        xs = np.arange(len(components)) + (k - (len(models) - 1) / 2.0) * width
        ys = [loss.get((c, model), np.nan) for c in components]
        ax.bar(xs, ys, width=width, label=model)
    for k, comp in enumerate(components):
        if chance.get(comp) is not None:
            ax.hlines(chance[comp], k - 0.45, k + 0.45,
                      colors="gray", linestyles=":")
    ax.set_xticks(np.arange(len(components)), components)
    ax.set_ylabel("held-out loss")
    ax.set_title("held-out prediction loss (dots: chance level)")
    ax.legend()
    return _save(fig, path)


def coclustering_figure(matrix, path, order=None):
    """Heatmap of posterior same-cluster probabilities."""
    matrix = np.asarray(matrix)
    if order is not None:
        order = np.asarray(order)
        matrix = matrix[np.ix_(order, order)]
    fig, ax = plt.subplots(figsize=(4.4, 4.0))
    im = ax.imshow(matrix, vmin=0.0, vmax=1.0, cmap="viridis",
                   interpolation="nearest")
    fig.colorbar(im, ax=ax, shrink=0.85)
    ax.set_title("posterior co-clustering")
    ax.set_xlabel("row")
    ax.set_ylabel("row")
    return _save(fig, path)


def trace_figure(sweeps, alpha, counts, path, beta=None):
    """Concentration and occupied-cluster traces across retained sweeps."""
    n_panels = 2 + (1 if beta is not None and len(beta) else 0)
    fig, axes = plt.subplots(n_panels, 1, figsize=(6.4, 2.1 * n_panels),
                             sharex=True)
    axes = np.atleast_1d(axes)
    axes[0].plot(sweeps, alpha, lw=0.8)
    axes[0].set_ylabel("top concentration")
    k = 1
    if beta is not None and len(beta):
        beta = np.asarray(beta)
        for j in range(beta.shape[1]):
            axes[1].plot(sweeps, beta[:, j], lw=0.8, label="component %d" % j)
        axes[1].set_ylabel("lower concentration")
        axes[1].legend(fontsize=7, ncol=2)
        k = 2
    axes[k].plot(sweeps, counts, lw=0.8)
    axes[k].set_ylabel("occupied clusters")
    axes[k].set_xlabel("sweep")
    return _save(fig, path)


def prediction_figure(rows, values, kind, path, levels=None):
    """Per-row summary of conditional predictions for one component."""
    values = np.asarray(values)
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    if kind == "categorical":
        bottom = np.zeros(len(rows))
        for lev in range(values.shape[1]):
            name = levels[lev] if levels else "level %d" % lev
            ax.bar(np.arange(len(rows)), values[:, lev], bottom=bottom,
                   label=name)
            bottom += values[:, lev]
        ax.set_ylabel("predictive probability")
        ax.legend(fontsize=7)
    else:
        for k in range(min(len(rows), 40)):
            ax.plot(values[k], lw=0.7, alpha=0.7)
        ax.set_ylabel("predicted mean")
        ax.set_xlabel("coordinate")
        ax.set_title("predicted mean profiles (first %d rows)"
                     % min(len(rows), 40))
        return _save(fig, path)
    ax.set_xticks(np.arange(len(rows)),
                  [str(r) for r in rows], fontsize=6, rotation=90)
    ax.set_xlabel("row")
    return _save(fig, path)
