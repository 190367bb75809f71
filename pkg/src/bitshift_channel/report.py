"""Figure rendering for the CLI report path (matplotlib, file output only)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt


def render_mi_sweep(points, path: str, title: str = "") -> None:
    """Mutual information interval versus jitter level."""
    eps = [p.eps for p in points if p.ok]
    lo = [p.result.mi_lower for p in points if p.ok]
    hi = [p.result.mi_upper for p in points if p.ok]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.fill_between(eps, lo, hi, alpha=0.35, linewidth=0, label="certified interval")
    ax.plot(eps, lo, lw=1.2, label="MI lower")
    ax.plot(eps, hi, lw=1.2, ls="--", label="MI upper")
    ax.set_xlabel(r"jitter level $\varepsilon$")
    ax.set_ylabel("mutual information [bits/run]")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_strategy_comparison(traces: dict, path: str, title: str = "") -> None:
    """Bound gap versus cylinder count for each refinement strategy (log-log)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    for strategy, rows in traces.items():
        cells = [r[0] for r in rows]
        gaps = [max(r[2] - r[1], 1e-300) for r in rows]
        ax.plot(cells, gaps, lw=1.2, label=strategy)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("cylinders in the partition")
    ax.set_ylabel("upper - lower [bits]")
    if title:
        ax.set_title(title)
    ax.legend(frameon=False)
    ax.grid(alpha=0.3, which="both")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def render_trace(rows, strategy: str, path: str, title: str = "") -> None:
    """Per-step bound trace of a single refinement run."""
    render_strategy_comparison({strategy: rows}, path, title=title)
