"""Per-period keyword analysis: vocabulary turnover, co-occurrence themes, evolution links.

Keyword clustering follows the simple-centers family: the strongest unused
association seeds a theme, which then grows by the strongest incident
association until the size cap. All ties break on lexicographic keyword
order so results are reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass

from .records import Corpus

SIMILARITY_MODES = ("jaccard", "overlap")


@dataclass(frozen=True)
class PeriodKeywordSet:
    """Keyword vocabulary of one period with per-keyword document counts."""

    period: tuple[int, int]
    doc_counts: dict

    @property
    def keywords(self) -> frozenset:
        return frozenset(self.doc_counts)

    def __len__(self) -> int:
        return len(self.doc_counts)


@dataclass(frozen=True)
class SuperpositionStep:
    """Vocabulary turnover between two consecutive periods."""

    from_period: tuple[int, int]
    to_period: tuple[int, int]
    kept: int
    new: int
    dropped: int
    similarity: float


@dataclass(frozen=True)
class CooccurrenceMatrix:
    """Symmetric document co-occurrence counts between keywords of one period."""

    pair_counts: dict  # (i, j) with i < j -> count
    marginals: dict  # keyword -> documents containing it
    doc_keyword_sets: tuple  # per-document keyword sets, for article counts

    def count(self, i: str, j: str) -> int:
        if i == j:
            return self.marginals.get(i, 0)
        key = (i, j) if i < j else (j, i)
        return self.pair_counts.get(key, 0)

    @property
    def keywords(self) -> list:
        return sorted(self.marginals)


@dataclass(frozen=True)
class Theme:
    """A keyword cluster: label is the most-connected member."""

    label: str
    members: frozenset
    article_count: int
    internal_density: float
    external_centrality: float


@dataclass(frozen=True)
class EvolutionLink:
    from_period: tuple[int, int]
    to_period: tuple[int, int]
    from_label: str
    to_label: str
    inclusion: float
    kind: str  # "solid" when the labels coincide, else "weak"


@dataclass(frozen=True)
class EvolutionMap:
    links: tuple


def keywords_by_period(slices) -> list[PeriodKeywordSet]:
    """Per-period keyword vocabularies from `(period, Corpus)` slices."""
    out = []
    for period, corpus in slices:
        counts: dict = {}
        for rec in corpus:
            for kw in set(rec.keywords):
                counts[kw] = counts.get(kw, 0) + 1
        out.append(PeriodKeywordSet(period, counts))
    return out


def superposition(k_from: PeriodKeywordSet, k_to: PeriodKeywordSet, mode: str = "jaccard") -> SuperpositionStep:
    """Kept / new / dropped keyword counts plus a set-similarity index.

    ``jaccard`` divides the overlap by the union, ``overlap`` by the smaller
    set. Two empty sets have similarity 0 by convention.
    """
    if mode not in SIMILARITY_MODES:
        raise ValueError(f"unknown similarity mode: {mode!r}")
    a = k_from.keywords
    b = k_to.keywords
    kept = len(a & b)
    new = len(b - a)
    dropped = len(a - b)
    if mode == "jaccard":
        union = len(a | b)
        similarity = kept / union if union else 0.0
    else:
        smaller = min(len(a), len(b))
        similarity = kept / smaller if smaller else 0.0
    return SuperpositionStep(k_from.period, k_to.period, kept, new, dropped, similarity)


def superposition_chain(period_sets: list[PeriodKeywordSet], mode: str = "jaccard") -> list[SuperpositionStep]:
    return [superposition(a, b, mode=mode) for a, b in zip(period_sets, period_sets[1:])]


def cooccurrence(corpus: Corpus) -> CooccurrenceMatrix:
    """Count, per keyword pair, the documents whose keyword set contains both."""
    pair_counts: dict = {}
    marginals: dict = {}
    doc_sets = []
    for rec in corpus:
        kws = sorted(set(rec.keywords))
        doc_sets.append(frozenset(kws))
        for idx, i in enumerate(kws):
            marginals[i] = marginals.get(i, 0) + 1
            for j in kws[idx + 1 :]:
                pair_counts[(i, j)] = pair_counts.get((i, j), 0) + 1
    return CooccurrenceMatrix(pair_counts, marginals, tuple(doc_sets))


def equivalence_index(m: CooccurrenceMatrix, i: str, j: str) -> float:
    """Association strength e_ij = c_ij^2 / (c_i * c_j), in [0, 1]."""
    ci = m.marginals.get(i)
    cj = m.marginals.get(j)
    if not ci or not cj:
        raise ValueError(f"zero marginal for {i!r} or {j!r}")
    cij = m.count(i, j)
    return (cij * cij) / (ci * cj)


def detect_themes(m: CooccurrenceMatrix, max_theme_size: int = 10, min_e: float = 0.05) -> list[Theme]:
    """Simple-centers clustering over the association graph.

    Repeatedly seed a theme from the strongest edge with both keywords
    unassigned, then grow it by the strongest edge touching the theme,
    up to ``max_theme_size`` members. Keywords belong to at most one theme.
    """
    if max_theme_size < 2:
        raise ValueError("max_theme_size must be >= 2")
    if not 0.0 < min_e <= 1.0:
        raise ValueError("min_e must be in (0, 1]")
    edges = []
    for (i, j), cij in m.pair_counts.items():
        if cij == 0:
            continue
        e = equivalence_index(m, i, j)
        if e >= min_e:
            edges.append((i, j, e))
    edges.sort(key=lambda t: (-t[2], t[0], t[1]))

    assigned: set = set()
    themes: list[Theme] = []
    for i, j, _e in edges:
        if i in assigned or j in assigned:
            continue
        members = {i, j}
        while len(members) < max_theme_size:
            best = None
            for a, b, e in edges:
                inside, outside = (a, b) if a in members else (b, a)
                if inside not in members or outside in members or outside in assigned:
                    continue
                # edges are pre-sorted, so the first hit is the strongest
                best = outside
                break
            if best is None:
                break
            members.add(best)
        assigned |= members
        themes.append(_finish_theme(m, members))
    return themes


def _finish_theme(m: CooccurrenceMatrix, members: set) -> Theme:
    ordered = sorted(members)
    strength = {}
    internal = []
    for idx, i in enumerate(ordered):
        s = 0.0
        for j in ordered:
            if i != j:
                s += equivalence_index(m, i, j)
        strength[i] = s
        for j in ordered[idx + 1 :]:
            internal.append(equivalence_index(m, i, j))
    # ties on strength resolve to the lexicographically smallest keyword
    top = max(strength.values())
    label = min(k for k in ordered if strength[k] == top)
    internal_density = sum(internal) / len(internal) if internal else 0.0
    external = 0.0
    for i in ordered:
        for j in m.marginals:
            if j not in members and m.count(i, j) > 0:
                external += equivalence_index(m, i, j)
    article_count = sum(1 for doc in m.doc_keyword_sets if doc & members)
    return Theme(label, frozenset(members), article_count, internal_density, external)


def inclusion_index(a: Theme, b: Theme) -> float:
    """Shared members over the smaller member set."""
    if not a.members or not b.members:
        raise ValueError("inclusion index needs non-empty member sets")
    shared = len(a.members & b.members)
    return shared / min(len(a.members), len(b.members))


def evolution_map(themes_per_period: list, min_inclusion: float) -> EvolutionMap:
    """Links between themes of consecutive periods with inclusion >= min_inclusion.

    ``themes_per_period`` is a list of (period, [Theme, ...]) in period order.
    A link is solid when the two theme labels coincide, weak otherwise.
    """
    if not 0.0 < min_inclusion <= 1.0:
        raise ValueError("min_inclusion must be in (0, 1]")
    links = []
    for (p_from, themes_from), (p_to, themes_to) in zip(themes_per_period, themes_per_period[1:]):
        for ta in themes_from:
            for tb in themes_to:
                inc = inclusion_index(ta, tb)
                if inc >= min_inclusion:
                    kind = "solid" if ta.label == tb.label else "weak"
                    links.append(EvolutionLink(p_from, p_to, ta.label, tb.label, inc, kind))
    links.sort(key=lambda l: (l.from_period, l.to_period, l.from_label, l.to_label))
    return EvolutionMap(tuple(links))
