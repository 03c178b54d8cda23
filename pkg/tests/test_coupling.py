import random

import pytest

from knowcart.coupling import (
    NetworkSummary,
    build_bcn,
    build_ref_index,
    coupling_strength,
    network_summary,
    reduce_graph,
)
from knowcart.records import BibRecord, Corpus

import oracles

REF_POOL = [
    "Scott, J. (1988). Social Network Analysis. Sociology",
    "Laeven, L., & Levine, R. (2009). Bank governance, regulation and risk taking. JFE",
    "Webber, M. (2004). The governance of European security. RIS",
    "Pritchard, A. (1969). Statistical Bibliography or Bibliometrics. JD",
    "Ruhnau, B. (2000). Eigenvector-centrality, a node-centrality. Social Networks",
    "Golbeck, J. (2015). Analyzing networks. Syngress",
    "Opsahl, T. (2010). Node centrality in weighted networks. Social Networks",
    "Cobo, M. (2012). A science mapping software tool. JASIST",
    "Boyack, K. (2010). Which citation approach represents the front. JASIST",
    "Bastian, M. (2009). An open source network exploration tool. ICWSM",
]


def doc(i, refs):
    return BibRecord(
        id=f"d{i:05d}",
        title=f"Governance and risk {i}",
        authors=(f"Author{i} A.",),
        affiliations=(),
        year=2010,
        keywords=("governance",),
        references=tuple(refs),
        source="Journal",
        doi=None,
    )


def corpus_abc():
    return Corpus(
        (
            doc(1, [REF_POOL[0], REF_POOL[1], REF_POOL[2]]),  # A
            doc(2, [REF_POOL[1], REF_POOL[2], REF_POOL[3]]),  # B
            doc(3, [REF_POOL[4]]),  # C
        )
    )


class TestRefIndex:
    def test_within_document_duplicates_collapse(self):
        c = Corpus((doc(1, [REF_POOL[0], REF_POOL[0], REF_POOL[1]]),))
        idx = build_ref_index(c)
        assert len(idx.doc_keys["d00001"]) == 2
        for posting in idx.postings.values():
            assert posting == {"d00001"}

    def test_shared_key_posts_both_documents(self):
        c = Corpus((doc(1, [REF_POOL[0]]), doc(2, [REF_POOL[0]])))
        idx = build_ref_index(c)
        (key,) = idx.postings
        assert idx.postings[key] == {"d00001", "d00002"}

    def test_fixture_membership(self):
        c = Corpus(
            (
                doc(1, [REF_POOL[0], REF_POOL[1]]),
                doc(2, [REF_POOL[1], REF_POOL[2]]),
                doc(3, [REF_POOL[3], REF_POOL[4], REF_POOL[5]]),
                doc(4, [REF_POOL[5]]),
            )
        )
        idx = build_ref_index(c)
        assert len(idx.postings) == 6
        sizes = sorted(len(p) for p in idx.postings.values())
        assert sizes == [1, 1, 1, 1, 2, 2]


class TestCouplingStrength:
    def test_two_shared(self):
        idx = build_ref_index(corpus_abc())
        assert coupling_strength(idx, "d00001", "d00002") == 2

    def test_disjoint(self):
        idx = build_ref_index(corpus_abc())
        assert coupling_strength(idx, "d00001", "d00003") == 0

    def test_symmetric(self):
        idx = build_ref_index(corpus_abc())
        assert coupling_strength(idx, "d00001", "d00002") == coupling_strength(idx, "d00002", "d00001")

    def test_same_document_rejected(self):
        idx = build_ref_index(corpus_abc())
        with pytest.raises(ValueError):
            coupling_strength(idx, "d00001", "d00001")

    def test_unknown_document(self):
        idx = build_ref_index(corpus_abc())
        with pytest.raises(KeyError):
            coupling_strength(idx, "d00001", "nope")

    def test_bounded_by_smaller_reference_list(self):
        rng = random.Random(4)
        c = _random_corpus(rng, 20)
        idx = build_ref_index(c)
        ids = sorted(idx.doc_keys)
        for a in ids:
            for b in ids:
                if a < b:
                    s = coupling_strength(idx, a, b)
                    assert s <= min(len(idx.doc_keys[a]), len(idx.doc_keys[b]))


class TestBuildBcn:
    def test_three_doc_example(self):
        g = build_bcn(corpus_abc(), min_shared=1)
        assert g.n == 3
        assert g.edges() == [("d00001", "d00002", 2.0)]

    def test_threshold_removes_edge(self):
        g = build_bcn(corpus_abc(), min_shared=3)
        assert g.edge_count == 0

    def test_identical_reference_lists(self):
        refs = REF_POOL[:5]
        c = Corpus((doc(1, refs), doc(2, refs)))
        g = build_bcn(c)
        assert g.edges() == [("d00001", "d00002", 5.0)]

    def test_empty_reference_lists_stay_isolated(self):
        c = Corpus((doc(1, []), doc(2, REF_POOL[:3]), doc(3, REF_POOL[:3])))
        g = build_bcn(c)
        assert g.node_degree("d00001") == 0

    def test_min_shared_monotone(self):
        rng = random.Random(8)
        c = _random_corpus(rng, 30)
        e1 = {(u, v) for u, v, _w in build_bcn(c, 1).edges()}
        e2 = {(u, v) for u, v, _w in build_bcn(c, 2).edges()}
        e3 = {(u, v) for u, v, _w in build_bcn(c, 3).edges()}
        assert e3 <= e2 <= e1

    def test_posting_cap_skips_pathological_key(self, caplog):
        shared = "Common, C. (2000). The one reference everyone cites. Journal"
        c = Corpus(tuple(doc(i, [shared]) for i in range(1, 8)))
        with caplog.at_level("WARNING"):
            g = build_bcn(c, min_shared=1, max_posting_size=3)
        assert g.edge_count == 0
        assert any("skipping key" in r.message for r in caplog.records)

    def test_node_labels_are_display_strings(self):
        g = build_bcn(corpus_abc())
        assert g.label("d00001") == "author1 a. 2010. journal"


class TestAgainstBruteForce:
    def test_matches_all_pairs_intersections(self):
        rng = random.Random(123)
        for _ in range(10):
            c = _random_corpus(rng, rng.randint(2, 50))
            min_shared = rng.randint(1, 3)
            g = build_bcn(c, min_shared)
            idx = build_ref_index(c)
            expected = oracles.brute_coupling(idx.doc_keys, min_shared)
            got = {(u, v): int(w) for u, v, w in g.edges()}
            assert got == expected
            assert set(g.nodes()) == {r.id for r in c}


class TestNetworkSummary:
    def test_large_network_counts(self):
        s = NetworkSummary.from_counts(529, 92308)
        assert s.mean_degree == pytest.approx(348.99, abs=0.01)
        assert s.density == pytest.approx(0.6610, abs=0.0005)

    def test_three_doc_example(self):
        s = network_summary(build_bcn(corpus_abc()))
        assert (s.n_articles, s.n_links) == (3, 1)
        assert s.density == pytest.approx(1 / 3)
        assert s.mean_degree == pytest.approx(2 / 3)
        assert s.n_isolated == 1

    def test_empty_graph_undefined_density(self):
        from knowcart.graphs import Graph

        s = network_summary(Graph())
        assert s.n_articles == 0
        assert s.density is None


class TestReduceGraph:
    def test_modes(self):
        g = build_bcn(corpus_abc())
        assert reduce_graph(g, "full").n == 3
        assert reduce_graph(g, "non-isolated").nodes() == ["d00001", "d00002"]
        assert reduce_graph(g, "largest-component").nodes() == ["d00001", "d00002"]

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            reduce_graph(build_bcn(corpus_abc()), "best-bits")


def _random_corpus(rng: random.Random, n_docs: int) -> Corpus:
    pool = [
        f"Writer{k}, W. ({1990 + k % 25}). Study number {k} of coupled things. Journal {k % 7}"
        for k in range(25)
    ]
    docs = []
    for i in range(1, n_docs + 1):
        refs = rng.sample(pool, rng.randint(0, 8))
        docs.append(doc(i, refs))
    return Corpus(tuple(docs))
