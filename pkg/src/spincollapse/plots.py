"""Static SVG figures (inspection aids; the CSV files are authoritative)."""

from __future__ import annotations

import numpy as np


def _plt():
    import matplotlib

    matplotlib.use("Agg", force=False)
    import matplotlib.pyplot as plt

    return plt


def population_plot(path, times, pop, analytic=None, label="up population"):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(times, pop, lw=0.8, label=label)
    if analytic is not None:
        ax.plot(times, analytic, "k--", lw=1.0, label="analytic mean")
    ax.set_xlabel("t (s)")
    ax.set_ylabel("population")
    ax.set_ylim(-0.02, 1.02)
    ax.legend(loc="best", fontsize=8)
    fig.savefig(path, format="svg")
    plt.close(fig)


def bloch_plot(path, sx, sy, sz):
    """Orthographic projection of the Bloch path, viewed along the x axis."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 5))
    theta = np.linspace(0, 2 * np.pi, 256)
    ax.plot(np.cos(theta), np.sin(theta), color="0.7", lw=1.0)
    ax.plot(sy, sz, lw=0.5)
    ax.plot([sy[0]], [sz[0]], "g^", ms=6, label="start")
    ax.plot([sy[-1]], [sz[-1]], "rv", ms=6, label="end")
    ax.set_xlabel("sy")
    ax.set_ylabel("sz")
    ax.set_aspect("equal")
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.legend(loc="lower right", fontsize=8)
    fig.savefig(path, format="svg")
    plt.close(fig)


def sweep_bar_chart(path, gammas, mean_t_r, std_t_r, reduced_fraction):
    """Mean reduction time per gamma with per-trajectory std bars; the
    reduced fraction is annotated above each bar."""
    plt = _plt()
    fig, ax = plt.subplots(figsize=(7, 4))
    pos = np.arange(len(gammas))
    means = [m if m is not None else np.nan for m in mean_t_r]
    stds = [s if s is not None else 0.0 for s in std_t_r]
    ax.bar(pos, means, yerr=stds, capsize=4, color="tab:blue", alpha=0.8)
    for i, frac in enumerate(reduced_fraction):
        if not np.isnan(means[i]):
            ax.annotate(
                f"{frac:.0%}",
                (pos[i], means[i] + stds[i]),
                textcoords="offset points",
                xytext=(0, 4),
                ha="center",
                fontsize=8,
            )
    ax.set_xticks(pos)
    ax.set_xticklabels([f"{g:g}" for g in gammas])
    ax.set_xlabel("gamma (1/s)")
    ax.set_ylabel("reduction time (s)")
    fig.savefig(path, format="svg")
    plt.close(fig)
