import json
import xml.etree.ElementTree as ET
from pathlib import Path

import pytest

from knowcart.communities import Partition
from knowcart.coupling import NetworkSummary, build_bcn, network_summary
from knowcart.cowords import EvolutionMap, SuperpositionStep, Theme
from knowcart.graphs import CentralityReport, Graph, compute_report, graph_from_text
from knowcart.records import BibRecord, Corpus
from knowcart.reporting import (
    ARTIFACT_KINDS,
    ReportBundle,
    affiliation_topic_flows,
    centrality_table,
    export_graph,
    file_digest,
    gexf_text,
    parse_metrics_csv,
    render_centrality_csv,
    render_metrics_csv,
    render_partition_csv,
    render_superposition_csv,
    truncate_1dp,
    write_report_bundle,
)

GEXF_NS = "{http://www.gexf.net/1.2draft}"


def article(i, year=2010, affiliations=(), keywords=("governance",), refs=()):
    return BibRecord(
        id=f"d{i:05d}",
        title=f"Governance and risk {i}",
        authors=(f"Author{i} A.",),
        affiliations=tuple(affiliations),
        year=year,
        keywords=tuple(keywords),
        references=tuple(refs),
        source="Journal of Examples",
        doi=None,
    )


class TestTruncate:
    def test_headline_values(self):
        assert truncate_1dp(348.99054820415875) == "348.9"
        assert truncate_1dp(0.6609672) == "0.6"

    def test_does_not_round_up(self):
        assert truncate_1dp(2.99) == "2.9"
        assert truncate_1dp(0.09) == "0.0"

    def test_exact_tenths(self):
        assert truncate_1dp(348.9) == "348.9"
        assert truncate_1dp(1.0) == "1.0"


class TestFlows:
    def test_single_article_single_triple(self):
        c = Corpus((article(1, affiliations=[("Beijing Normal University", "China")], keywords=["risk governance"]),))
        [flow] = affiliation_topic_flows(c)
        assert (flow.country, flow.institution, flow.topic, flow.weight) == (
            "China",
            "Beijing Normal University",
            "risk governance",
            1,
        )

    def test_cross_product_of_affiliations_and_keywords(self):
        c = Corpus(
            (
                article(
                    1,
                    affiliations=[("Uni A", "Norway"), ("Uni B", "Chile")],
                    keywords=["risk", "security"],
                ),
            )
        )
        flows = affiliation_topic_flows(c)
        assert len(flows) == 4
        assert all(f.weight == 1 for f in flows)

    def test_five_article_fixture_hand_counted(self):
        c = Corpus(
            (
                article(1, affiliations=[("Uni A", "Norway")], keywords=["risk"]),
                article(2, affiliations=[("Uni A", "Norway")], keywords=["risk"]),
                article(3, affiliations=[("Uni A", "Norway")], keywords=["security"]),
                article(4, affiliations=[("Uni B", "Chile")], keywords=["risk"]),
                article(5, affiliations=[("Uni B", "Chile"), ("Uni A", "Norway")], keywords=["risk"]),
            )
        )
        flows = {(f.country, f.institution, f.topic): f.weight for f in affiliation_topic_flows(c)}
        assert flows == {
            ("Norway", "Uni A", "risk"): 3,
            ("Norway", "Uni A", "security"): 1,
            ("Chile", "Uni B", "risk"): 2,
        }

    def test_country_totals_match_occurrences(self):
        c = Corpus(
            (
                article(1, affiliations=[("Uni A", "Norway"), ("Uni C", "Norway")], keywords=["risk", "water"]),
                article(2, affiliations=[("Uni A", "Norway")], keywords=["risk"]),
            )
        )
        flows = affiliation_topic_flows(c, 100, 100, 100)
        norway = sum(f.weight for f in flows if f.country == "Norway")
        assert norway == 4 + 1  # article 1: 2 insts x 2 topics, article 2: 1x1

    def test_top_n_restriction(self):
        c = Corpus(
            tuple(
                article(i, affiliations=[(f"Uni {i}", f"Country {i}")], keywords=["risk"])
                for i in range(1, 6)
            )
            + (article(9, affiliations=[("Big Uni", "Bigland")] , keywords=["risk"]),)
            + (article(10, affiliations=[("Big Uni", "Bigland")], keywords=["risk"]),)
        )
        flows = affiliation_topic_flows(c, top_countries=1, top_institutions=1, top_topics=5)
        assert {f.country for f in flows} == {"Bigland"}

    def test_limit_validation(self):
        with pytest.raises(ValueError):
            affiliation_topic_flows(Corpus(()), top_countries=0)


class TestCentralityTable:
    def test_renders_reference_row(self):
        report = CentralityReport(
            degree={"438": 733, "900": 10},
            closeness={"438": 0.749, "900": 0.5},
            betweenness={"438": 0.010, "900": 0.001},
            eigencentrality={"438": 0.885, "900": 0.2},
            mean_degree=0.0,
            density=0.0,
        )
        partition = Partition({"438": 2, "900": 1}, 0.0, {1: 1, 2: 1})
        labels = {"438": "elshandidy t. 2015. corp gov: int rev", "900": "other a. 2000. j"}
        table = centrality_table(report, partition, labels, k=5)
        text = render_centrality_csv(table)
        assert '2,438,"elshandidy t. 2015. corp gov: int rev",733,0.749,0.010,0.885' in text.splitlines()

    def test_k_larger_than_cluster_lists_all(self):
        report = CentralityReport(
            degree={"a": 1, "b": 1},
            closeness={"a": 1.0, "b": 1.0},
            betweenness={"a": 0.0, "b": 0.0},
            eigencentrality={"a": 1.0, "b": 1.0},
            mean_degree=1.0,
            density=1.0,
        )
        partition = Partition({"a": 1, "b": 1}, 0.0, {1: 2})
        table = centrality_table(report, partition, {}, k=10)
        assert len(table.rows) == 2

    def test_betweenness_tie_breaks_by_node_id(self):
        report = CentralityReport(
            degree={"a": 1, "b": 1, "c": 1},
            closeness={"a": 1.0, "b": 1.0, "c": 1.0},
            betweenness={"a": 0.5, "b": 0.5, "c": 0.9},
            eigencentrality={"a": 1.0, "b": 1.0, "c": 1.0},
            mean_degree=1.0,
            density=1.0,
        )
        partition = Partition({"a": 1, "b": 1, "c": 1}, 0.0, {1: 3})
        table = centrality_table(report, partition, {}, k=3)
        assert [row[1] for row in table.rows] == ["c", "a", "b"]

    def test_node_set_mismatch_rejected(self):
        report = CentralityReport({"a": 1}, {"a": 1.0}, {"a": 0.0}, {"a": 1.0}, 0.0, 0.0)
        partition = Partition({"a": 1, "b": 1}, 0.0, {1: 2})
        with pytest.raises(ValueError):
            centrality_table(report, partition, {}, k=1)

    def test_label_with_quotes_escaped(self):
        report = CentralityReport({"a": 1}, {"a": 1.0}, {"a": 0.0}, {"a": 1.0}, 0.0, 0.0)
        partition = Partition({"a": 1}, 0.0, {1: 1})
        text = render_centrality_csv(centrality_table(report, partition, {"a": 'say "hi"'}, k=1))
        assert '"say ""hi"""' in text


class TestMetricsRoundTrip:
    def test_parse_back_exact(self):
        g = Graph(edges=[("a", "b"), ("b", "c"), ("a", "c"), ("c", "d")])
        report = compute_report(g)
        text = render_metrics_csv(report, {"a": "label a"})
        back = parse_metrics_csv(text)
        assert back.degree == report.degree
        assert back.closeness == report.closeness
        assert back.betweenness == report.betweenness
        assert back.eigencentrality == report.eigencentrality


class TestGexf:
    def graph_and_attrs(self):
        g = Graph(edges=[("a", "b", 2.0), ("b", "c", 1.0), ("a", "c", 1.0)], labels={"a": "A & co"})
        attrs = {u: {"cluster": 1, "betweenness": 0.0} for u in g.nodes()}
        return g, attrs

    def test_structure_parses_and_conforms(self):
        g, attrs = self.graph_and_attrs()
        root = ET.fromstring(gexf_text(g, attrs))
        assert root.tag == f"{GEXF_NS}gexf"
        assert root.attrib["version"] == "1.2"
        graph_el = root.find(f"{GEXF_NS}graph")
        assert graph_el.attrib["defaultedgetype"] == "undirected"
        declared = {
            a.attrib["id"]
            for a in graph_el.find(f"{GEXF_NS}attributes").findall(f"{GEXF_NS}attribute")
        }
        node_els = graph_el.find(f"{GEXF_NS}nodes").findall(f"{GEXF_NS}node")
        assert len(node_els) == 3
        node_ids = set()
        for el in node_els:
            node_ids.add(el.attrib["id"])
            assert "label" in el.attrib
            for av in el.find(f"{GEXF_NS}attvalues").findall(f"{GEXF_NS}attvalue"):
                assert av.attrib["for"] in declared
        edge_els = graph_el.find(f"{GEXF_NS}edges").findall(f"{GEXF_NS}edge")
        assert len(edge_els) == 3
        for el in edge_els:
            assert el.attrib["source"] in node_ids
            assert el.attrib["target"] in node_ids
            assert float(el.attrib["weight"]) > 0

    def test_byte_stable(self):
        g, attrs = self.graph_and_attrs()
        assert gexf_text(g, attrs) == gexf_text(g, attrs)

    def test_missing_required_attr_rejected(self):
        g, attrs = self.graph_and_attrs()
        del attrs["a"]["betweenness"]
        with pytest.raises(ValueError):
            gexf_text(g, attrs)

    def test_export_round_trip(self, tmp_path):
        g, attrs = self.graph_and_attrs()
        gexf_path = tmp_path / "net.gexf"
        export_graph(g, attrs, gexf_path)
        back = graph_from_text(
            (tmp_path / "net_edges.tsv").read_text(),
            (tmp_path / "net_nodes.csv").read_text(),
        )
        assert back == g

    def test_unwritable_path_raises_oserror(self, tmp_path):
        g, attrs = self.graph_and_attrs()
        with pytest.raises(OSError):
            export_graph(g, attrs, tmp_path / "nope" / "deep" / "net.gexf")


def make_bundle():
    corpus = Corpus(
        (
            article(1, year=1999, affiliations=[("Uni A", "Norway")], keywords=["governance", "risk"],
                    refs=["Scott, J. (1988). Social Network Analysis."]),
            article(2, year=2004, affiliations=[("Uni B", "Chile")], keywords=["governance", "water"],
                    refs=["Scott, J. (1988). Social Network Analysis."]),
            article(3, year=2010, affiliations=[("Uni A", "Norway")], keywords=["risk", "water"],
                    refs=["Scott, J. (1988). Social Network Analysis.",
                          "Pritchard, A. (1969). Statistical Bibliography. JD"]),
            article(4, year=2015, affiliations=[("Uni C", "India")], keywords=["security"],
                    refs=["Pritchard, A. (1969). Statistical Bibliography. JD"]),
        )
    )
    graph = build_bcn(corpus)
    report = compute_report(graph)
    partition = Partition({u: 1 for u in graph.nodes()}, 0.0, {1: graph.n})
    labels = graph.labels()
    steps = [SuperpositionStep((1998, 2002), (2003, 2007), 1, 1, 1, 0.5)]
    theme = Theme("governance", frozenset({"governance", "risk"}), 2, 0.5, 0.0)
    themes_per_period = [((1998, 2002), [theme])]
    evolution = EvolutionMap(())
    flows = affiliation_topic_flows(corpus)
    return ReportBundle(
        corpus=corpus,
        superposition=steps,
        themes_per_period=themes_per_period,
        evolution=evolution,
        graph=graph,
        node_attrs={u: {"cluster": 1, "betweenness": report.betweenness[u]} for u in graph.nodes()},
        display_graph=graph,
        partition=partition,
        report=report,
        labels=labels,
        flows=flows,
        summary=network_summary(graph),
    )


class TestBundle:
    def test_writes_nine_artifact_kinds_and_manifest(self, tmp_path):
        manifest = write_report_bundle(make_bundle(), tmp_path)
        assert len(manifest["artifacts"]) == 9
        assert set(manifest["artifacts"]) == set(ARTIFACT_KINDS)
        listed = {f["file"] for f in manifest["files"]}
        for kind_files in manifest["artifacts"].values():
            for rel in kind_files:
                assert rel in listed
                assert (tmp_path / rel).is_file()
        assert (tmp_path / "manifest.json").is_file()

    def test_digests_match_content(self, tmp_path):
        manifest = write_report_bundle(make_bundle(), tmp_path)
        for entry in manifest["files"]:
            path = tmp_path / entry["file"]
            assert path.stat().st_size == entry["bytes"]
            assert file_digest(path) == entry["digest"]

    def test_rerun_identical_digests(self, tmp_path):
        m1 = write_report_bundle(make_bundle(), tmp_path / "run1")
        m2 = write_report_bundle(make_bundle(), tmp_path / "run2")
        assert m1 == m2

    def test_failure_names_artifact_and_leaves_no_manifest(self, tmp_path, monkeypatch):
        bundle = make_bundle()
        bundle.flows = object()  # render_flows_csv will blow up on this
        with pytest.raises(RuntimeError, match="reports/flows.csv"):
            write_report_bundle(bundle, tmp_path)
        assert not (tmp_path / "manifest.json").exists()

    def test_partition_csv_shape(self):
        partition = Partition({"a": 1, "b": 1, "c": 2}, 0.1, {1: 2, 2: 1})
        text = render_partition_csv(partition)
        lines = text.strip().splitlines()
        assert lines[0] == "node_id,cluster,percent_of_network"
        assert lines[1].startswith("a,1,66.67")

    def test_superposition_csv_shape(self):
        steps = [SuperpositionStep((1998, 2002), (2003, 2007), 2, 3, 1, 0.25)]
        text = render_superposition_csv(steps)
        assert "from,to,kept,new,dropped,similarity" in text
        assert "1998-2002,2003-2007,2,3,1,0.2500" in text

    def test_empty_corpus_bundle_degenerates_cleanly(self, tmp_path):
        empty_graph = Graph()
        bundle = ReportBundle(
            corpus=Corpus(()),
            superposition=[],
            themes_per_period=[],
            evolution=EvolutionMap(()),
            graph=empty_graph,
            node_attrs={},
            display_graph=empty_graph,
            partition=Partition({}, 0.0, {}),
            report=CentralityReport({}, {}, {}, {}, float("nan"), float("nan")),
            labels={},
            flows=[],
            summary=NetworkSummary.from_counts(0, 0),
        )
        manifest = write_report_bundle(bundle, tmp_path)
        assert len(manifest["artifacts"]) == 9
        assert (tmp_path / "corpus" / "corpus.json").is_file()
        table = (tmp_path / "reports" / "centrality_table.csv").read_text()
        assert table.strip() == "cluster,node_id,label,degree,closeness,betweenness,eigencentrality"
