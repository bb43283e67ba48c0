"""Render report figures to PNG files next to their plot-data CSVs.

Rendering is purely a view of the delimited outputs: every figure can be
rebuilt from its CSV alone.  The Agg backend plus fixed metadata keeps the
files byte-stable across reruns on the same library versions.
"""

import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

_SAVE_KW = {"dpi": 100, "metadata": {"Software": "hategraph"}}
_GROUP_COLORS = {
    "hateful": "#c0392b",
    "normal": "#2980b9",
    "hateful_neighbors": "#e67e22",
    "normal_neighbors": "#8e44ad",
    "suspended": "#7f8c8d",
    "active": "#27ae60",
}


def _color(group):
    return _GROUP_COLORS.get(group, "#555555")


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KW)
    plt.close(fig)
    return path


def render_group_means(summary_rows, path, title):
    """Bar grid of group means with 95% CI whiskers.

    summary_rows: (group, metric, n, mean, ci95, median) tuples.
    """
    metrics = sorted({r[1] for r in summary_rows})
    groups = sorted({r[0] for r in summary_rows})
    ncols = min(3, max(1, len(metrics)))
    nrows = (len(metrics) + ncols - 1) // ncols
    fig, axes = plt.subplots(nrows, ncols, figsize=(4 * ncols, 3 * nrows),
                             squeeze=False)
    by_key = {(r[0], r[1]): r for r in summary_rows}
    for mi, metric in enumerate(metrics):
        ax = axes[mi // ncols][mi % ncols]
        xs = np.arange(len(groups))
        means = [by_key[(grp, metric)][3] if (grp, metric) in by_key else 0.0
                 for grp in groups]
        cis = [by_key[(grp, metric)][4] if (grp, metric) in by_key else 0.0
               for grp in groups]
        ax.bar(xs, means, yerr=cis, capsize=3,
               color=[_color(grp) for grp in groups])
        ax.set_xticks(xs)
        ax.set_xticklabels(groups, rotation=30, ha="right", fontsize=7)
        ax.set_title(metric, fontsize=9)
    for j in range(len(metrics), nrows * ncols):
        axes[j // ncols][j % ncols].axis("off")
    fig.suptitle(title, fontsize=11)
    return _finish(fig, path)


def render_group_boxes(value_rows, path, title, log_scale=False):
    """Boxplots per metric, one box per group.

    value_rows: (group, metric, value) tuples of raw per-user values.
    """
    metrics = sorted({r[1] for r in value_rows})
    groups = sorted({r[0] for r in value_rows})
    fig, axes = plt.subplots(1, max(1, len(metrics)),
                             figsize=(4 * max(1, len(metrics)), 3.5),
                             squeeze=False)
    for mi, metric in enumerate(metrics):
        ax = axes[0][mi]
        data, labels = [], []
        for grp in groups:
            vals = [r[2] for r in value_rows if r[0] == grp and r[1] == metric]
            if vals:
                data.append(vals)
                labels.append(grp)
        box = ax.boxplot(data, tick_labels=labels, showfliers=False,
                         patch_artist=True)
        for patch, grp in zip(box["boxes"], labels):
            patch.set_facecolor(_color(grp))
            patch.set_alpha(0.6)
        ax.tick_params(axis="x", rotation=30, labelsize=7)
        ax.set_title(metric, fontsize=9)
        if log_scale:
            ax.set_yscale("symlog")
    fig.suptitle(title, fontsize=11)
    return _finish(fig, path)


def render_mixing(mix_rows, path):
    """Heatmap of source-type to destination-type edge probabilities.

    mix_rows: (source_type, dest_type, probability) tuples.
    """
    types = sorted({r[0] for r in mix_rows} | {r[1] for r in mix_rows})
    grid = np.zeros((len(types), len(types)))
    lookup = {t: i for i, t in enumerate(types)}
    for s, d, p in mix_rows:
        grid[lookup[s], lookup[d]] = p
    fig, ax = plt.subplots(figsize=(1.2 * len(types) + 2, 1.0 * len(types) + 2))
    im = ax.imshow(grid, cmap="viridis", vmin=0.0, vmax=max(1e-9, grid.max()))
    ax.set_xticks(range(len(types)))
    ax.set_xticklabels(types, rotation=30, ha="right", fontsize=8)
    ax.set_yticks(range(len(types)))
    ax.set_yticklabels(types, fontsize=8)
    ax.set_xlabel("destination type")
    ax.set_ylabel("source type")
    for i in range(len(types)):
        for j in range(len(types)):
            ax.text(j, i, f"{grid[i, j]:.3f}", ha="center", va="center",
                    fontsize=7, color="white" if grid[i, j] < 0.6 * grid.max()
                    else "black")
    fig.colorbar(im, ax=ax, shrink=0.8)
    ax.set_title("edge mixing by node type", fontsize=10)
    return _finish(fig, path)


def render_all(plot_dir, fig_dir):
    """Re-render every known plotdata CSV found in plot_dir into fig_dir."""
    from hategraph.util import data_lines

    os.makedirs(fig_dir, exist_ok=True)
    written = []

    def read_rows(name, parse):
        src = os.path.join(plot_dir, name)
        if not os.path.exists(src):
            return None
        rows = []
        for _, line in data_lines(src):
            parts = line.split(",")
            if parts[0] == "group" or parts[0] == "source_type":
                continue
            rows.append(parse(parts))
        return rows

    summary = read_rows("activity_summary.csv", lambda p: (
        p[0], p[1], int(p[2]), float(p[3]), float(p[4]), float(p[5])))
    if summary:
        written.append(render_group_means(
            summary, os.path.join(fig_dir, "activity.png"),
            "activity rates by group"))
    cats = read_rows("category_summary.csv", lambda p: (
        p[0], p[1], int(p[2]), float(p[3]), float(p[4]), float(p[5])))
    if cats:
        written.append(render_group_means(
            cats, os.path.join(fig_dir, "categories.png"),
            "lexical category occurrence by group"))
    for name, title, log_scale in (
            ("creation_values.csv", "account age (days)", False),
            ("spam_values.csv", "spam indicators", False),
            ("centrality_values.csv", "network centrality", True),
            ("sentiment_values.csv", "sentiment and profanity", False)):
        rows = read_rows(name, lambda p: (p[0], p[1], float(p[2])))
        if rows:
            out = os.path.join(fig_dir, name.replace("_values.csv", ".png"))
            written.append(render_group_boxes(rows, out, title, log_scale))
    mix = read_rows("mixing.csv", lambda p: (p[0], p[1], float(p[2])))
    if mix:
        written.append(render_mixing(mix, os.path.join(fig_dir, "mixing.png")))
    return written
