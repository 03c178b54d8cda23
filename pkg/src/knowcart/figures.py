"""Summary charts rendered next to the delimited reports.

These are plain data summaries (bar charts and histograms) of the pipeline
outputs, written as PNG files with fixed size, dpi and metadata so reruns
are byte-identical.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .communities import Partition, composition
from .cowords import PeriodKeywordSet, SuperpositionStep
from .graphs import Graph
from .records import period_label

_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": None}}


def _save(fig, path):
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)


def keyword_turnover_chart(period_sets: list[PeriodKeywordSet], steps: list[SuperpositionStep], path) -> None:
    """Stacked bars of kept vs new keywords per period."""
    labels = [period_label(ps.period) for ps in period_sets]
    kept = [0] + [s.kept for s in steps]
    new = [len(period_sets[0])] + [s.new for s in steps]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    x = range(len(labels))
    ax.bar(x, kept, color="#4878a8", label="kept")
    ax.bar(x, new, bottom=kept, color="#e8a54b", label="new")
    ax.set_xticks(list(x))
    ax.set_xticklabels(labels)
    ax.set_ylabel("keywords")
    ax.set_title("Keyword turnover by period")
    ax.legend()
    fig.tight_layout()
    _save(fig, path)


def cluster_composition_chart(partition: Partition, path) -> None:
    """Bar chart of each cluster's share of the network."""
    shares = composition(partition)
    cids = sorted(shares)
    values = [float(shares[c]) for c in cids]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.bar([str(c) for c in cids], values, color="#4878a8")
    ax.set_xlabel("cluster")
    ax.set_ylabel("% of nodes")
    ax.set_title("Cluster composition")
    fig.tight_layout()
    _save(fig, path)


def top_betweenness_chart(betweenness: dict, labels: dict, path, top: int = 10) -> None:
    """Horizontal bars for the highest-betweenness nodes."""
    ranked = sorted(betweenness, key=lambda u: (-betweenness[u], u))[:top]
    names = [labels.get(u, str(u))[:40] for u in ranked]
    values = [betweenness[u] for u in ranked]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    ax.barh(range(len(ranked)), values, color="#4878a8")
    ax.set_yticks(range(len(ranked)))
    ax.set_yticklabels(names, fontsize=7)
    ax.invert_yaxis()
    ax.set_xlabel("betweenness")
    ax.set_title("Top betweenness nodes")
    fig.tight_layout()
    _save(fig, path)


def edge_weight_chart(g: Graph, path) -> None:
    """Histogram of coupling-edge weights."""
    weights = [w for _u, _v, w in g.edges()]
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    if weights:
        bins = min(30, max(5, int(max(weights))))
        ax.hist(weights, bins=bins, color="#4878a8")
    ax.set_xlabel("shared references")
    ax.set_ylabel("edges")
    ax.set_title("Coupling strength distribution")
    fig.tight_layout()
    _save(fig, path)


def render_all(
    figures_dir,
    period_sets: list[PeriodKeywordSet],
    steps: list[SuperpositionStep],
    partition: Partition,
    betweenness: dict,
    labels: dict,
    graph: Graph,
) -> list[str]:
    """Render the full chart set; returns workspace-relative-ish file names."""
    out_dir = Path(figures_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    if period_sets:
        keyword_turnover_chart(period_sets, steps, out_dir / "keyword_turnover.png")
        written.append("keyword_turnover.png")
    cluster_composition_chart(partition, out_dir / "cluster_composition.png")
    written.append("cluster_composition.png")
    top_betweenness_chart(betweenness, labels, out_dir / "top_betweenness.png")
    written.append("top_betweenness.png")
    edge_weight_chart(graph, out_dir / "edge_weights.png")
    written.append("edge_weights.png")
    return written
