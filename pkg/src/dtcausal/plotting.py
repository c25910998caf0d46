"""Report figures: small matplotlib renderings saved next to record files."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .graphs import Dag  # noqa: E402
from .regimes import InfluenceDiagram  # noqa: E402

RC = {
    "figure.figsize": (6.0, 3.7),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "font.size": 9,
}


def save_figure(fig, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)
    return path


def bar_figure(labels: Sequence[str], values: Sequence[float], title: str,
               ylabel: str, reference: float | None = None):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        ax.bar(range(len(values)), values, color="#4878a8")
        ax.set_xticks(range(len(labels)))
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylabel(ylabel)
        ax.set_title(title)
        if reference is not None:
            ax.axhline(reference, color="#b0413e", linestyle="--", linewidth=1,
                       label=f"reference {reference:g}")
            ax.legend(frameon=False)
        fig.tight_layout()
    return fig


def frequency_figure(labels: Sequence[str], empirical: Sequence[float],
                     exact: Sequence[float], title: str):
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        idx = range(len(labels))
        ax.bar([i - 0.2 for i in idx], empirical, width=0.4, label="empirical",
               color="#4878a8")
        ax.bar([i + 0.2 for i in idx], exact, width=0.4, label="exact",
               color="#e1a03c")
        ax.set_xticks(list(idx))
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylabel("probability")
        ax.set_title(title)
        ax.legend(frameon=False)
        fig.tight_layout()
    return fig


def graph_figure(graph: Dag | InfluenceDiagram, title: str = ""):
    """Layered drawing: nodes ranked by longest path from a root."""
    if isinstance(graph, InfluenceDiagram):
        dag, regime = graph.dag, graph.regime_nodes
    else:
        dag, regime = graph, frozenset()
    depth: dict[str, int] = {}
    for v in dag.topological_order():
        parents = dag.parents(v)
        depth[v] = 1 + max((depth[p] for p in parents), default=-1)
    layers: dict[int, list[str]] = {}
    for v, d in depth.items():
        layers.setdefault(d, []).append(v)
    coords: dict[str, tuple[float, float]] = {}
    for d in sorted(layers):
        row = sorted(layers[d])
        for j, v in enumerate(row):
            coords[v] = (j - (len(row) - 1) / 2.0, -d)
    with plt.rc_context(RC):
        fig, ax = plt.subplots()
        for a, b in dag.sorted_edges():
            xa, ya = coords[a]
            xb, yb = coords[b]
            ax.annotate("", xy=(xb, yb), xytext=(xa, ya),
                        arrowprops=dict(arrowstyle="-|>", color="#555555",
                                        shrinkA=14, shrinkB=14))
        for v, (x, y) in coords.items():
            face = "#f2e3c6" if v in regime else "#d6e4f0"
            ax.scatter([x], [y], s=680, facecolor=face, edgecolor="#333333", zorder=3)
            ax.annotate(v, (x, y), ha="center", va="center", zorder=4)
        ax.set_axis_off()
        if title:
            ax.set_title(title)
        fig.tight_layout()
    return fig
