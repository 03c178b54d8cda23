"""Report artifacts: affiliation flows, centrality tables, GEXF export, bundles.

Every writer is deterministic: rows, nodes, edges and JSON keys are sorted
and numeric formatting is fixed, so equal inputs produce byte-identical
files. The bundle manifest is written last; its presence certifies that
every other artifact landed completely.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import quoteattr

from .communities import Partition, composition, top_clusters
from .coupling import NetworkSummary
from .cowords import EvolutionMap, SuperpositionStep
from .graphs import CentralityReport, Graph, edge_list_text, node_table_text
from .records import Corpus, corpus_to_json, period_label

# What a complete report bundle contains. The edge-list and node-table files
# are two halves of one serialization format and count as a single kind.
ARTIFACT_KINDS = (
    "corpus",
    "superposition",
    "themes",
    "evolution",
    "graph-gexf",
    "graph-edgelist",
    "partition",
    "centrality-table",
    "flows",
)


@dataclass(frozen=True)
class FlowTriple:
    country: str
    institution: str
    topic: str
    weight: int


def truncate_1dp(value: float) -> str:
    """Truncate (not round) to one decimal for headline summary numbers."""
    scaled = int(value * 10.0 + 1e-9) if value >= 0 else -int(-value * 10.0 + 1e-9)
    return f"{scaled / 10.0:.1f}"


def affiliation_topic_flows(
    corpus: Corpus,
    top_countries: int = 10,
    top_institutions: int = 10,
    top_topics: int = 10,
) -> list[FlowTriple]:
    """Article counts per (country, institution, topic) combination.

    Each combination counts once per article it occurs in; articles with
    several affiliations or keywords contribute to several triples. The
    result keeps only the top-N countries, institutions and topics by total
    weight (ties resolved lexicographically).
    """
    if min(top_countries, top_institutions, top_topics) < 1:
        raise ValueError("top-N limits must be >= 1")
    counts: Counter = Counter()
    for rec in corpus:
        combos = {
            (country, inst, topic)
            for inst, country in rec.affiliations
            for topic in rec.keywords
        }
        for combo in combos:
            counts[combo] += 1

    def top(dimension: int, limit: int) -> set:
        totals: Counter = Counter()
        for combo, w in counts.items():
            totals[combo[dimension]] += w
        ranked = sorted(totals, key=lambda name: (-totals[name], name))
        return set(ranked[:limit])

    keep_c = top(0, top_countries)
    keep_i = top(1, top_institutions)
    keep_t = top(2, top_topics)
    triples = [
        FlowTriple(country, inst, topic, w)
        for (country, inst, topic), w in counts.items()
        if country in keep_c and inst in keep_i and topic in keep_t
    ]
    triples.sort(key=lambda t: (-t.weight, t.country, t.institution, t.topic))
    return triples


@dataclass(frozen=True)
class CentralityTable:
    """Per-cluster top rows: (cluster, node, label, degree, closeness, betweenness, eigen)."""

    rows: tuple


def centrality_table(
    report: CentralityReport,
    partition: Partition,
    labels: dict,
    k: int,
    cluster_ids: list | None = None,
) -> CentralityTable:
    """The k highest-betweenness nodes of each cluster with all four measures.

    Rows are grouped by cluster (in ``cluster_ids`` order, default all
    clusters by id) and sorted by descending betweenness, ties by node id.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if set(report.degree) != set(partition.assignment):
        raise ValueError("report and partition must cover the same node set")
    clusters = partition.clusters()
    if cluster_ids is None:
        cluster_ids = sorted(clusters)
    rows = []
    for cid in cluster_ids:
        members = clusters[cid]
        ranked = sorted(members, key=lambda u: (-report.betweenness[u], u))
        for node in ranked[:k]:
            rows.append(
                (
                    cid,
                    node,
                    labels.get(node, str(node)),
                    report.degree[node],
                    report.closeness[node],
                    report.betweenness[node],
                    report.eigencentrality[node],
                )
            )
    return CentralityTable(tuple(rows))


def _csv_field(value: str, always_quote: bool = False) -> str:
    needs = always_quote or any(ch in value for ch in ',"\r\n')
    if needs:
        return '"' + value.replace('"', '""') + '"'
    return value


def render_centrality_csv(table: CentralityTable) -> str:
    """3-decimal centralities, integer degree, label always quoted."""
    lines = ["cluster,node_id,label,degree,closeness,betweenness,eigencentrality"]
    for cid, node, label, deg, clo, bet, eig in table.rows:
        lines.append(
            f"{cid},{_csv_field(str(node))},{_csv_field(label, always_quote=True)},"
            f"{deg},{clo:.3f},{bet:.3f},{eig:.3f}"
        )
    return "\r\n".join(lines) + "\r\n"


def render_superposition_csv(steps: list[SuperpositionStep]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["from", "to", "kept", "new", "dropped", "similarity"])
    for s in steps:
        writer.writerow(
            [period_label(s.from_period), period_label(s.to_period), s.kept, s.new, s.dropped, f"{s.similarity:.4f}"]
        )
    return buf.getvalue()


def render_flows_csv(flows: list[FlowTriple]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["country", "institution", "topic", "weight"])
    for f in flows:
        writer.writerow([f.country, f.institution, f.topic, f.weight])
    return buf.getvalue()


def render_partition_csv(partition: Partition) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["node_id", "cluster", "percent_of_network"])
    if not partition.assignment:
        return buf.getvalue()
    shares = composition(partition)
    for node in sorted(partition.assignment):
        cid = partition.assignment[node]
        writer.writerow([node, cid, f"{float(shares[cid]):.2f}"])
    return buf.getvalue()


def render_themes_json(themes_per_period: list) -> str:
    payload = [
        {
            "period": period_label(period),
            "themes": [
                {
                    "label": t.label,
                    "members": sorted(t.members),
                    "article_count": t.article_count,
                    "internal_density": t.internal_density,
                    "external_centrality": t.external_centrality,
                }
                for t in themes
            ],
        }
        for period, themes in themes_per_period
    ]
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_evolution_json(evolution: EvolutionMap) -> str:
    payload = [
        {
            "from_period": period_label(l.from_period),
            "to_period": period_label(l.to_period),
            "from_theme": l.from_label,
            "to_theme": l.to_label,
            "inclusion": l.inclusion,
            "kind": l.kind,
        }
        for l in evolution.links
    ]
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def render_metrics_csv(report: CentralityReport, labels: dict) -> str:
    """Per-node metric table at full float precision, for later stages to reload."""
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(["node_id", "label", "degree", "closeness", "betweenness", "eigencentrality"])
    for node in sorted(report.degree):
        writer.writerow(
            [
                node,
                labels.get(node, str(node)),
                report.degree[node],
                repr(report.closeness[node]),
                repr(report.betweenness[node]),
                repr(report.eigencentrality[node]),
            ]
        )
    return buf.getvalue()


def parse_metrics_csv(text: str) -> CentralityReport:
    """Rebuild a report from :func:`render_metrics_csv` output.

    Global mean degree and density are not stored per node; they are
    recomputed by the caller from the graph when needed, so this loader
    fills them with NaN placeholders.
    """
    reader = csv.reader(io.StringIO(text))
    header = next(reader)
    if header[:2] != ["node_id", "label"]:
        raise ValueError("not a metrics table")
    degree: dict = {}
    clo: dict = {}
    bet: dict = {}
    eig: dict = {}
    for row in reader:
        if not row:
            continue
        node = row[0]
        degree[node] = int(row[2])
        clo[node] = float(row[3])
        bet[node] = float(row[4])
        eig[node] = float(row[5])
    return CentralityReport(degree, clo, bet, eig, float("nan"), float("nan"))


def render_summary_json(summary: NetworkSummary) -> str:
    payload = {
        "n_articles": summary.n_articles,
        "n_links": summary.n_links,
        "density": summary.density,
        "mean_degree": summary.mean_degree,
        "n_isolated": summary.n_isolated,
        "density_display": truncate_1dp(summary.density) if summary.density is not None else None,
        "mean_degree_display": truncate_1dp(summary.mean_degree) if summary.mean_degree is not None else None,
    }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def render_clusters_json(partition: Partition, betweenness: dict, labels: dict, top_members: int = 5) -> str:
    shares = composition(partition)
    payload = []
    for cid, members in sorted(partition.clusters().items()):
        ranked = sorted(members, key=lambda u: (-betweenness.get(u, 0.0), u))
        payload.append(
            {
                "cluster": cid,
                "size": len(members),
                "percent": float(shares[cid]),
                "percent_display": round(float(shares[cid])),
                "top_members": [
                    {"node": u, "label": labels.get(u, str(u)), "betweenness": betweenness.get(u, 0.0)}
                    for u in ranked[:top_members]
                ],
            }
        )
    return json.dumps({"modularity": partition.modularity, "clusters": payload}, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def gexf_text(g: Graph, node_attrs: dict) -> str:
    """GEXF 1.2 XML with cluster/betweenness node attributes and weighted edges.

    ``node_attrs`` maps every node to a dict that must at least contain
    ``cluster`` (int) and ``betweenness`` (float). Nodes and edges are
    sorted and the attribute order is fixed, so output is byte-stable.
    """
    for u in g.nodes():
        attrs = node_attrs.get(u)
        if attrs is None or "cluster" not in attrs or "betweenness" not in attrs:
            raise ValueError(f"node {u!r} missing required attributes cluster/betweenness")
    out = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<gexf xmlns="http://www.gexf.net/1.2draft" version="1.2">',
        "  <meta>",
        "    <creator>knowcart</creator>",
        "    <description>coupling network with cluster and betweenness attributes</description>",
        "  </meta>",
        '  <graph defaultedgetype="undirected">',
        '    <attributes class="node">',
        '      <attribute id="0" title="cluster" type="integer"/>',
        '      <attribute id="1" title="betweenness" type="double"/>',
        "    </attributes>",
        "    <nodes>",
    ]
    for u in g.nodes():
        attrs = node_attrs[u]
        out.append(f"      <node id={quoteattr(str(u))} label={quoteattr(g.label(u))}>")
        out.append("        <attvalues>")
        out.append(f'          <attvalue for="0" value={quoteattr(str(int(attrs["cluster"])))}/>')
        out.append(f'          <attvalue for="1" value={quoteattr(format(float(attrs["betweenness"]), ".6f"))}/>')
        out.append("        </attvalues>")
        out.append("      </node>")
    out.append("    </nodes>")
    out.append("    <edges>")
    for eid, (u, v, w) in enumerate(g.edges()):
        wtxt = str(int(w)) if float(w).is_integer() else repr(w)
        out.append(
            f'      <edge id="{eid}" source={quoteattr(str(u))} target={quoteattr(str(v))} weight={quoteattr(wtxt)}/>'
        )
    out.append("    </edges>")
    out.append("  </graph>")
    out.append("</gexf>")
    return "\n".join(out) + "\n"


def export_graph(g: Graph, node_attrs: dict, gexf_path, edges_path=None, nodes_path=None) -> None:
    """Write the GEXF file plus the edge-list/node-table pair next to it."""
    gexf_path = Path(gexf_path)
    if edges_path is None:
        edges_path = gexf_path.with_name(gexf_path.stem + "_edges.tsv")
    if nodes_path is None:
        nodes_path = gexf_path.with_name(gexf_path.stem + "_nodes.csv")
    gexf_path.write_text(gexf_text(g, node_attrs), encoding="utf-8")
    Path(edges_path).write_text(edge_list_text(g), encoding="utf-8")
    Path(nodes_path).write_text(node_table_text(g), encoding="utf-8")


def file_digest(path) -> str:
    h = hashlib.sha256()
    h.update(Path(path).read_bytes())
    return h.hexdigest()


def write_manifest(workspace, artifacts: dict) -> dict:
    """Digest every file under the workspace and write manifest.json last.

    ``artifacts`` maps artifact kind -> list of workspace-relative paths.
    The manifest's ``files`` section covers every file present, including
    auxiliary ones not listed under a kind.
    """
    root = Path(workspace)
    files = []
    for path in sorted(p for p in root.rglob("*") if p.is_file() and p.name != "manifest.json"):
        rel = path.relative_to(root).as_posix()
        files.append({"file": rel, "bytes": path.stat().st_size, "digest": file_digest(path)})
    manifest = {"artifacts": {k: sorted(v) for k, v in artifacts.items()}, "files": files}
    (root / "manifest.json").write_text(
        json.dumps(manifest, sort_keys=True, indent=2) + "\n", encoding="utf-8"
    )
    return manifest


@dataclass
class ReportBundle:
    """Everything the one-shot bundle writer persists."""

    corpus: Corpus
    superposition: list
    themes_per_period: list
    evolution: EvolutionMap
    graph: Graph
    node_attrs: dict
    display_graph: Graph
    partition: Partition
    report: CentralityReport
    labels: dict
    flows: list
    summary: NetworkSummary
    table_k: int = 5
    top_cluster_count: int = 5


def write_report_bundle(bundle: ReportBundle, workspace) -> dict:
    """Write the full artifact set plus a digest manifest; manifest comes last.

    On failure the manifest is absent and the raised error names the
    artifact being written.
    """
    root = Path(workspace)
    for sub in ("corpus", "graphs", "themes", "reports"):
        (root / sub).mkdir(parents=True, exist_ok=True)

    top = top_clusters(bundle.partition, bundle.top_cluster_count)
    table = centrality_table(bundle.report, bundle.partition, bundle.labels, bundle.table_k, cluster_ids=top)

    display_attrs = {u: bundle.node_attrs[u] for u in bundle.display_graph.nodes()}
    artifacts = {
        "corpus": ["corpus/corpus.json"],
        "superposition": ["reports/superposition.csv"],
        "themes": ["themes/themes.json"],
        "evolution": ["themes/evolution.json"],
        "graph-gexf": ["graphs/bcn.gexf", "graphs/display.gexf"],
        "graph-edgelist": ["graphs/bcn_edges.tsv", "graphs/bcn_nodes.csv"],
        "partition": ["reports/partition.csv"],
        "centrality-table": ["reports/centrality_table.csv"],
        "flows": ["reports/flows.csv"],
    }
    writes = [
        ("corpus/corpus.json", lambda: corpus_to_json(bundle.corpus)),
        ("reports/superposition.csv", lambda: render_superposition_csv(bundle.superposition)),
        ("themes/themes.json", lambda: render_themes_json(bundle.themes_per_period)),
        ("themes/evolution.json", lambda: render_evolution_json(bundle.evolution)),
        ("graphs/bcn.gexf", lambda: gexf_text(bundle.graph, bundle.node_attrs)),
        ("graphs/bcn_edges.tsv", lambda: edge_list_text(bundle.graph)),
        ("graphs/bcn_nodes.csv", lambda: node_table_text(bundle.graph)),
        ("graphs/display.gexf", lambda: gexf_text(bundle.display_graph, display_attrs)),
        ("reports/partition.csv", lambda: render_partition_csv(bundle.partition)),
        ("reports/centrality_table.csv", lambda: render_centrality_csv(table)),
        ("reports/flows.csv", lambda: render_flows_csv(bundle.flows)),
        ("graphs/bcn_summary.json", lambda: render_summary_json(bundle.summary)),
    ]
    for rel, produce in writes:
        try:
            (root / rel).write_text(produce(), encoding="utf-8", newline="")
        except Exception as exc:
            raise RuntimeError(f"failed writing artifact {rel}: {exc}") from exc
    return write_manifest(root, artifacts)
