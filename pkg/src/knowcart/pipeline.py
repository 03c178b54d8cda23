"""End-to-end pipeline: configuration, workspace layout, staged execution.

Stages write their artifacts into a workspace directory; later stages read
the earlier files rather than recomputing. ``run`` executes everything and
finishes by writing the digest manifest, whose presence marks a complete
run. The whole pipeline is a pure function of (input files, config): reruns
are byte-identical, for any thread count.
"""

from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, fields, replace
from pathlib import Path

from . import coupling, cowords, figures, records, reporting
from .communities import Partition, detect_communities, filter_top_betweenness, modularity, top_clusters
from .graphs import compute_report, read_graph_files, write_graph_files

DEFAULT_PERIODS = ((1998, 2002), (2003, 2007), (2008, 2012), (2013, 2018))
DEFAULT_REQUIRED = ("governance",)
DEFAULT_ANY_OF = ("security", "risk", "competition", "cooperation")

WORKSPACE_ENV = "KC_WORKSPACE"

STAGE_ORDER = ("ingest", "superpose", "themes", "evolve", "couple", "metrics", "cluster", "export")

BUNDLE_ARTIFACTS = {
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


class ConfigError(ValueError):
    """Invalid pipeline configuration."""


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name and an exit code."""

    def __init__(self, stage: str, message: str, exit_code: int = 3):
        super().__init__(message)
        self.stage = stage
        self.exit_code = exit_code


@dataclass
class PipelineConfig:
    """All pipeline knobs.

    Defaults: four periods 1998-2002 / 2003-2007 / 2008-2012 / 2013-2018,
    title query "governance" AND any of {security, risk, competition,
    cooperation}, top-5 clusters, betweenness display fraction 0.5 and
    5 table rows per cluster.
    """

    inputs: tuple = ()
    required_terms: tuple = DEFAULT_REQUIRED
    any_of_terms: tuple = DEFAULT_ANY_OF
    stem_match: bool = False
    periods: tuple = DEFAULT_PERIODS
    year_bounds: tuple = (records.YEAR_MIN, records.YEAR_MAX)
    ref_delimiter: str = ";"
    min_shared: int = 1
    max_posting_size: int | None = None
    reduction: str = "non-isolated"
    max_theme_size: int = 10
    min_e: float = 0.05
    min_inclusion: float = 0.1
    similarity: str = "jaccard"
    resolution: float = 1.0
    top_clusters: int = 5
    betweenness_fraction: float = 0.5
    table_k: int = 5
    eigen_tol: float = 1e-10
    eigen_max_iter: int = 10000
    figures: bool = True
    threads: int | str = "auto"
    workspace: str = "workspace"

    def validate(self) -> None:
        if not self.required_terms:
            raise ConfigError("required_terms must be non-empty")
        try:
            records.PeriodSlicing(tuple(tuple(p) for p in self.periods))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        lo, hi = self.year_bounds
        if lo > hi:
            raise ConfigError("year_bounds out of order")
        if self.min_shared < 1:
            raise ConfigError("min_shared must be >= 1")
        if self.max_posting_size is not None and self.max_posting_size < 2:
            raise ConfigError("max_posting_size must be >= 2 when set")
        if self.reduction not in coupling.REDUCTION_MODES:
            raise ConfigError(f"reduction must be one of {coupling.REDUCTION_MODES}")
        if self.max_theme_size < 2:
            raise ConfigError("max_theme_size must be >= 2")
        if not 0.0 < self.min_e <= 1.0:
            raise ConfigError("min_e must be in (0, 1]")
        if not 0.0 < self.min_inclusion <= 1.0:
            raise ConfigError("min_inclusion must be in (0, 1]")
        if self.similarity not in cowords.SIMILARITY_MODES:
            raise ConfigError(f"similarity must be one of {cowords.SIMILARITY_MODES}")
        if self.resolution <= 0:
            raise ConfigError("resolution must be > 0")
        if self.top_clusters < 1 or self.table_k < 1:
            raise ConfigError("top_clusters and table_k must be >= 1")
        if not 0.0 < self.betweenness_fraction <= 1.0:
            raise ConfigError("betweenness_fraction must be in (0, 1]")
        if self.eigen_tol <= 0 or self.eigen_max_iter < 1:
            raise ConfigError("eigen_tol must be > 0 and eigen_max_iter >= 1")
        if self.threads != "auto" and (not isinstance(self.threads, int) or self.threads < 1):
            raise ConfigError("threads must be 'auto' or a positive integer")

    def thread_count(self) -> int:
        if self.threads == "auto":
            return os.cpu_count() or 1
        return int(self.threads)

    def title_query(self) -> records.TitleQuery:
        return records.TitleQuery(
            frozenset(self.required_terms), frozenset(self.any_of_terms), self.stem_match
        )

    def slicing(self) -> records.PeriodSlicing:
        return records.PeriodSlicing(tuple(tuple(p) for p in self.periods))


_CONFIG_FIELDS = {f.name for f in fields(PipelineConfig)}


def config_from_dict(data: dict) -> PipelineConfig:
    unknown = set(data) - _CONFIG_FIELDS
    if unknown:
        raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
    prepared = dict(data)
    for key in ("inputs", "required_terms", "any_of_terms"):
        if key in prepared:
            prepared[key] = tuple(prepared[key])
    if "periods" in prepared:
        prepared["periods"] = tuple(tuple(p) for p in prepared["periods"])
    if "year_bounds" in prepared:
        prepared["year_bounds"] = tuple(prepared["year_bounds"])
    cfg = PipelineConfig(**prepared)
    cfg.validate()
    return cfg


def load_config(path) -> PipelineConfig:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError(f"config file {path} must hold a JSON object")
    return config_from_dict(data)


def apply_overrides(cfg: PipelineConfig, overrides: list[str]) -> PipelineConfig:
    """Apply ``key=value`` overrides; values parse as JSON, else raw strings."""
    updates = {}
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, raw = item.split("=", 1)
        key = key.strip()
        if key not in _CONFIG_FIELDS:
            raise ConfigError(f"unknown config key: {key}")
        try:
            updates[key] = json.loads(raw)
        except json.JSONDecodeError:
            updates[key] = raw
    merged = replace(cfg, **updates)
    return config_from_dict({f.name: getattr(merged, f.name) for f in fields(PipelineConfig)})


@dataclass(frozen=True)
class Workspace:
    """On-disk layout: corpus/, graphs/, themes/, reports/, manifest.json."""

    root: Path

    def __init__(self, root):
        object.__setattr__(self, "root", Path(root))

    @property
    def corpus_file(self) -> Path:
        return self.root / "corpus" / "corpus.json"

    @property
    def superposition_file(self) -> Path:
        return self.root / "reports" / "superposition.csv"

    @property
    def themes_file(self) -> Path:
        return self.root / "themes" / "themes.json"

    @property
    def evolution_file(self) -> Path:
        return self.root / "themes" / "evolution.json"

    @property
    def edges_file(self) -> Path:
        return self.root / "graphs" / "bcn_edges.tsv"

    @property
    def nodes_file(self) -> Path:
        return self.root / "graphs" / "bcn_nodes.csv"

    @property
    def summary_file(self) -> Path:
        return self.root / "graphs" / "bcn_summary.json"

    @property
    def gexf_file(self) -> Path:
        return self.root / "graphs" / "bcn.gexf"

    @property
    def display_gexf_file(self) -> Path:
        return self.root / "graphs" / "display.gexf"

    @property
    def metrics_file(self) -> Path:
        return self.root / "reports" / "metrics.csv"

    @property
    def partition_file(self) -> Path:
        return self.root / "reports" / "partition.csv"

    @property
    def clusters_file(self) -> Path:
        return self.root / "reports" / "clusters.json"

    @property
    def table_file(self) -> Path:
        return self.root / "reports" / "centrality_table.csv"

    @property
    def flows_file(self) -> Path:
        return self.root / "reports" / "flows.csv"

    @property
    def figures_dir(self) -> Path:
        return self.root / "reports" / "figures"

    @property
    def manifest_file(self) -> Path:
        return self.root / "manifest.json"

    def ensure(self) -> None:
        for sub in ("corpus", "graphs", "themes", "reports"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    def require(self, path: Path, producer: str) -> Path:
        if not path.exists():
            raise StageError(
                producer,
                f"missing workspace artifact {path}; run the '{producer}' stage first",
                exit_code=2,
            )
        return path


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8", newline="")


def _load_corpus(ws: Workspace) -> records.Corpus:
    path = ws.require(ws.corpus_file, "ingest")
    return records.corpus_from_json(path.read_text(encoding="utf-8"))


def stage_ingest(cfg: PipelineConfig, ws: Workspace):
    """Parse, dedup and title-filter the input files into corpus/corpus.json."""
    ws.ensure()
    if not cfg.inputs:
        raise StageError("ingest", "no input files configured", exit_code=1)
    corpora = []
    all_errors = []
    for i, input_path in enumerate(cfg.inputs):
        if not Path(input_path).exists():
            raise StageError("ingest", f"input file not found: {input_path}", exit_code=2)
        prefix = "d" if len(cfg.inputs) == 1 else f"d{i}-"
        corpus, errors = records.parse_export_file(
            input_path,
            ref_delimiter=cfg.ref_delimiter,
            year_bounds=tuple(cfg.year_bounds),
            id_prefix=prefix,
        )
        corpora.append(corpus)
        all_errors.extend(errors)
    merged = records.merge_corpora(corpora)
    deduped = records.dedup(merged)
    filtered = records.filter_by_title(deduped, cfg.title_query())
    _write(ws.corpus_file, records.corpus_to_json(filtered))
    return filtered, all_errors


def stage_superpose(cfg: PipelineConfig, ws: Workspace):
    corpus = _load_corpus(ws)
    slices, _unassigned = records.slice_periods(corpus, cfg.slicing())
    period_sets = cowords.keywords_by_period(slices)
    steps = cowords.superposition_chain(period_sets, mode=cfg.similarity)
    _write(ws.superposition_file, reporting.render_superposition_csv(steps))
    return period_sets, steps


def stage_themes(cfg: PipelineConfig, ws: Workspace):
    corpus = _load_corpus(ws)
    slices, _unassigned = records.slice_periods(corpus, cfg.slicing())
    themes_per_period = []
    for period, slice_corpus in slices:
        matrix = cowords.cooccurrence(slice_corpus)
        themes = cowords.detect_themes(matrix, cfg.max_theme_size, cfg.min_e)
        themes_per_period.append((period, themes))
    _write(ws.themes_file, reporting.render_themes_json(themes_per_period))
    return themes_per_period


def _themes_from_file(ws: Workspace):
    path = ws.require(ws.themes_file, "themes")
    payload = json.loads(path.read_text(encoding="utf-8"))
    themes_per_period = []
    for entry in payload:
        start, end = entry["period"].split("-")
        themes = [
            cowords.Theme(
                t["label"],
                frozenset(t["members"]),
                t["article_count"],
                t["internal_density"],
                t["external_centrality"],
            )
            for t in entry["themes"]
        ]
        themes_per_period.append(((int(start), int(end)), themes))
    return themes_per_period


def stage_evolve(cfg: PipelineConfig, ws: Workspace):
    themes_per_period = _themes_from_file(ws)
    evolution = cowords.evolution_map(themes_per_period, cfg.min_inclusion)
    _write(ws.evolution_file, reporting.render_evolution_json(evolution))
    return evolution


def stage_couple(cfg: PipelineConfig, ws: Workspace):
    """Build the full coupling graph and persist its edge-list/node-table pair."""
    corpus = _load_corpus(ws)
    graph = coupling.build_bcn(corpus, cfg.min_shared, cfg.max_posting_size)
    summary = coupling.network_summary(graph)
    ws.ensure()
    write_graph_files(graph, ws.edges_file, ws.nodes_file)
    _write(ws.summary_file, reporting.render_summary_json(summary))
    return graph, summary


def _load_analysis_graph(cfg: PipelineConfig, ws: Workspace):
    ws.require(ws.edges_file, "couple")
    ws.require(ws.nodes_file, "couple")
    full = read_graph_files(ws.edges_file, ws.nodes_file)
    return coupling.reduce_graph(full, cfg.reduction)


def stage_metrics(cfg: PipelineConfig, ws: Workspace):
    graph = _load_analysis_graph(cfg, ws)
    if graph.n < 3:
        raise StageError("metrics", f"analysis graph has only {graph.n} nodes; need >= 3", exit_code=1)
    report = compute_report(
        graph, tol=cfg.eigen_tol, max_iter=cfg.eigen_max_iter, threads=cfg.thread_count()
    )
    _write(ws.metrics_file, reporting.render_metrics_csv(report, graph.labels()))
    return graph, report


def stage_cluster(cfg: PipelineConfig, ws: Workspace):
    graph = _load_analysis_graph(cfg, ws)
    metrics_path = ws.require(ws.metrics_file, "metrics")
    report = reporting.parse_metrics_csv(metrics_path.read_text(encoding="utf-8"))
    partition = detect_communities(graph, resolution=cfg.resolution)
    _write(ws.partition_file, reporting.render_partition_csv(partition))
    _write(
        ws.clusters_file,
        reporting.render_clusters_json(partition, report.betweenness, graph.labels(), cfg.table_k),
    )
    return graph, partition


def _partition_from_file(ws: Workspace, graph, resolution: float) -> Partition:
    path = ws.require(ws.partition_file, "cluster")
    assignment = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            if row:
                assignment[row[0]] = int(row[1])
    sizes: dict = {}
    for cid in assignment.values():
        sizes[cid] = sizes.get(cid, 0) + 1
    return Partition(assignment, modularity(graph, assignment, resolution), sizes)


def stage_export(cfg: PipelineConfig, ws: Workspace):
    """GEXF exports, centrality table, flows and (optionally) figure renders."""
    corpus = _load_corpus(ws)
    graph = _load_analysis_graph(cfg, ws)
    report = reporting.parse_metrics_csv(
        ws.require(ws.metrics_file, "metrics").read_text(encoding="utf-8")
    )
    partition = _partition_from_file(ws, graph, cfg.resolution)
    labels = graph.labels()

    node_attrs = {
        u: {"cluster": partition.assignment[u], "betweenness": report.betweenness[u]}
        for u in graph.nodes()
    }
    top = set(top_clusters(partition, cfg.top_clusters))
    trimmed = filter_top_betweenness(graph, report.betweenness, cfg.betweenness_fraction)
    display = trimmed.subgraph([u for u in trimmed.nodes() if partition.assignment[u] in top])

    _write(ws.gexf_file, reporting.gexf_text(graph, node_attrs))
    display_attrs = {u: node_attrs[u] for u in display.nodes()}
    _write(ws.display_gexf_file, reporting.gexf_text(display, display_attrs))

    ordered_top = top_clusters(partition, cfg.top_clusters)
    table = reporting.centrality_table(report, partition, labels, cfg.table_k, cluster_ids=ordered_top)
    _write(ws.table_file, reporting.render_centrality_csv(table))

    flows = reporting.affiliation_topic_flows(corpus)
    _write(ws.flows_file, reporting.render_flows_csv(flows))

    if cfg.figures:
        slices, _ = records.slice_periods(corpus, cfg.slicing())
        period_sets = cowords.keywords_by_period(slices)
        steps = cowords.superposition_chain(period_sets, mode=cfg.similarity)
        figures.render_all(
            ws.figures_dir, period_sets, steps, partition, report.betweenness, labels, graph
        )
    return display, table, flows


_STAGES = {
    "ingest": stage_ingest,
    "superpose": stage_superpose,
    "themes": stage_themes,
    "evolve": stage_evolve,
    "couple": stage_couple,
    "metrics": stage_metrics,
    "cluster": stage_cluster,
    "export": stage_export,
}


def run_stage(name: str, cfg: PipelineConfig, ws: Workspace):
    """Execute one stage, wrapping unexpected failures with the stage name."""
    stage = _STAGES[name]
    try:
        return stage(cfg, ws)
    except StageError:
        raise
    except OSError as exc:
        raise StageError(name, str(exc), exit_code=2) from exc
    except Exception as exc:
        raise StageError(name, f"{type(exc).__name__}: {exc}", exit_code=3) from exc


def run(cfg: PipelineConfig, workspace=None) -> dict:
    """Full pipeline: every stage in order, then the digest manifest.

    Returns the manifest mapping. Any stage failure propagates as
    :class:`StageError` and leaves no manifest behind.
    """
    cfg.validate()
    ws = Workspace(workspace if workspace is not None else cfg.workspace)
    ws.ensure()
    if ws.manifest_file.exists():
        ws.manifest_file.unlink()
    for name in STAGE_ORDER:
        run_stage(name, cfg, ws)
    return reporting.write_manifest(ws.root, BUNDLE_ARTIFACTS)
