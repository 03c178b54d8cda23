"""Reference-sharing network: articles linked by the references they have in common.

Edge weight is the raw count of shared canonical reference keys; no
normalization is applied. Pair generation runs over an inverted index so
only documents that actually share a key are ever compared.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass

from .graphs import Graph, largest_component
from .records import Corpus, reference_key

log = logging.getLogger(__name__)

REDUCTION_MODES = ("full", "non-isolated", "largest-component")


@dataclass(frozen=True)
class RefIndex:
    """Inverted index: canonical reference key -> documents citing it."""

    postings: dict
    doc_keys: dict  # document id -> frozenset of keys

    def documents(self):
        return self.doc_keys.keys()


@dataclass(frozen=True)
class NetworkSummary:
    """Headline network statistics; density is None below two nodes."""

    n_articles: int
    n_links: int
    density: float | None
    mean_degree: float | None
    n_isolated: int

    @classmethod
    def from_counts(cls, n_articles: int, n_links: int, n_isolated: int = 0) -> "NetworkSummary":
        mean = 2.0 * n_links / n_articles if n_articles >= 1 else None
        dens = 2.0 * n_links / (n_articles * (n_articles - 1)) if n_articles >= 2 else None
        return cls(n_articles, n_links, dens, mean, n_isolated)


def build_ref_index(corpus: Corpus) -> RefIndex:
    """Post each document once per distinct canonical key of its references."""
    postings: dict = {}
    doc_keys: dict = {}
    for rec in corpus:
        keys = frozenset(reference_key(r) for r in rec.references)
        keys -= {""}
        doc_keys[rec.id] = keys
        for key in keys:
            postings.setdefault(key, set()).add(rec.id)
    return RefIndex(postings, doc_keys)


def coupling_strength(index: RefIndex, a, b) -> int:
    """Number of canonical reference keys shared by documents ``a`` and ``b``."""
    if a == b:
        raise ValueError("coupling strength is defined for distinct documents")
    if a not in index.doc_keys:
        raise KeyError(a)
    if b not in index.doc_keys:
        raise KeyError(b)
    return len(index.doc_keys[a] & index.doc_keys[b])


def build_bcn(corpus: Corpus, min_shared: int = 1, max_posting_size: int | None = None) -> Graph:
    """Coupling graph over all corpus documents.

    An edge (a, b) with weight w exists iff the documents share w >= min_shared
    canonical reference keys. Postings larger than ``max_posting_size`` are
    skipped with a warning; such keys are usually normalization collisions
    and would blow up pair generation quadratically.
    """
    if min_shared < 1:
        raise ValueError("min_shared must be >= 1")
    index = build_ref_index(corpus)
    pair_counts: Counter = Counter()
    for key in sorted(index.postings):
        docs = index.postings[key]
        if max_posting_size is not None and len(docs) > max_posting_size:
            log.warning("skipping key %r shared by %d documents (cap %d)", key, len(docs), max_posting_size)
            continue
        members = sorted(docs)
        for i, a in enumerate(members):
            for b in members[i + 1 :]:
                pair_counts[(a, b)] += 1
    edges = [(a, b, float(w)) for (a, b), w in sorted(pair_counts.items()) if w >= min_shared]
    labels = {rec.id: rec.display_label() for rec in corpus}
    return Graph(nodes=[rec.id for rec in corpus], edges=edges, labels=labels)


def network_summary(g: Graph) -> NetworkSummary:
    isolated = sum(1 for u in g.nodes() if g.node_degree(u) == 0)
    summary = NetworkSummary.from_counts(g.n, g.edge_count, isolated)
    return summary


def reduce_graph(g: Graph, mode: str) -> Graph:
    """Select the analysis subgraph: full, non-isolated nodes, or largest component."""
    if mode not in REDUCTION_MODES:
        raise ValueError(f"unknown reduction mode: {mode!r}")
    if mode == "full":
        return g
    if mode == "non-isolated":
        keep = [u for u in g.nodes() if g.node_degree(u) > 0]
        return g.subgraph(keep)
    return largest_component(g)
