"""Command-line front end: one subcommand per pipeline stage plus ``all``.

Exit codes: 0 success, 1 validation problem, 2 I/O problem, 3 internal error.
The workspace directory resolves from --workspace, then the KC_WORKSPACE
environment variable, then the config file's ``workspace`` entry.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from . import pipeline, records, reporting
from .pipeline import ConfigError, PipelineConfig, StageError, Workspace

log = logging.getLogger("knowcart")


class _Parser(argparse.ArgumentParser):
    # usage problems are validation failures → exit 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--workspace", help="workspace directory (default: $KC_WORKSPACE or config)")
    common.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override a config entry (value parsed as JSON when possible)",
    )
    common.add_argument("--threads", help="worker threads: a number or 'auto'")
    common.add_argument("--verbose", action="store_true", help="debug logging")

    parser = _Parser(prog="knowcart", description="science-mapping pipeline over bibliographic exports")
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("ingest", parents=[common], help="parse, dedup and title-filter inputs")
    sp.add_argument("inputs", nargs="*", help="export CSV files (overrides config inputs)")
    sub.add_parser("superpose", parents=[common], help="period-over-period keyword turnover table")
    sub.add_parser("themes", parents=[common], help="per-period keyword themes")
    sub.add_parser("evolve", parents=[common], help="theme evolution links between periods")
    sub.add_parser("couple", parents=[common], help="build the reference-coupling network")
    sub.add_parser("metrics", parents=[common], help="centrality report for the analysis graph")
    sub.add_parser("cluster", parents=[common], help="community partition and composition")
    sub.add_parser("export", parents=[common], help="GEXF/table/flows exports and figures")
    sp_all = sub.add_parser("all", parents=[common], help="run the whole pipeline and write the manifest")
    sp_all.add_argument("inputs", nargs="*", help="export CSV files (overrides config inputs)")
    return parser


def _resolve_config(args) -> PipelineConfig:
    cfg = pipeline.load_config(args.config) if args.config else PipelineConfig()
    overrides = list(args.overrides)
    inputs = getattr(args, "inputs", None)
    if inputs:
        cfg = pipeline.apply_overrides(cfg, overrides) if overrides else cfg
        cfg = pipeline.config_from_dict(
            {**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__}, "inputs": tuple(inputs)}
        )
    elif overrides:
        cfg = pipeline.apply_overrides(cfg, overrides)
    if args.threads:
        threads = args.threads if args.threads == "auto" else int(args.threads)
        cfg = pipeline.config_from_dict(
            {**{f: getattr(cfg, f) for f in cfg.__dataclass_fields__}, "threads": threads}
        )
    cfg.validate()
    return cfg


def _resolve_workspace(args, cfg: PipelineConfig) -> Workspace:
    root = args.workspace or os.environ.get(pipeline.WORKSPACE_ENV) or cfg.workspace
    return Workspace(root)


def _fmt(value, digits=3):
    return "NA" if value is None else f"{value:.{digits}f}"


def _cmd_ingest(cfg, ws):
    corpus, errors = pipeline.run_stage("ingest", cfg, ws)
    for err in errors:
        print(f"row error: line {err.line}: {err.message}", file=sys.stderr)
    print(f"ingested {len(corpus)} records -> {ws.corpus_file}")
    return 0


def _cmd_superpose(cfg, ws):
    period_sets, steps = pipeline.run_stage("superpose", cfg, ws)
    for ps in period_sets:
        print(f"{records.period_label(ps.period)}: {len(ps)} keywords")
    for s in steps:
        print(
            f"{records.period_label(s.from_period)} -> {records.period_label(s.to_period)}: "
            f"kept={s.kept} new={s.new} dropped={s.dropped} similarity={s.similarity:.4f}"
        )
    return 0


def _cmd_themes(cfg, ws):
    themes_per_period = pipeline.run_stage("themes", cfg, ws)
    for period, themes in themes_per_period:
        print(f"{records.period_label(period)}: {len(themes)} themes")
        for t in themes:
            print(f"  {t.label}: members={len(t.members)} articles={t.article_count}")
    return 0


def _cmd_evolve(cfg, ws):
    evolution = pipeline.run_stage("evolve", cfg, ws)
    solid = sum(1 for l in evolution.links if l.kind == "solid")
    print(f"{len(evolution.links)} links ({solid} solid) -> {ws.evolution_file}")
    return 0


def _cmd_couple(cfg, ws):
    _graph, summary = pipeline.run_stage("couple", cfg, ws)
    print(
        f"n={summary.n_articles} L={summary.n_links} "
        f"density={_fmt(summary.density)} mean_degree={_fmt(summary.mean_degree)}"
    )
    return 0


def _cmd_metrics(cfg, ws):
    graph, report = pipeline.run_stage("metrics", cfg, ws)
    for node in graph.nodes():
        print(
            f"{node} degree={report.degree[node]} closeness={report.closeness[node]:.3f} "
            f"betweenness={report.betweenness[node]:.3f} eigencentrality={report.eigencentrality[node]:.3f}"
        )
    print(
        f"mean_degree={reporting.truncate_1dp(report.mean_degree)} "
        f"density={reporting.truncate_1dp(report.density)}"
    )
    return 0


def _cmd_cluster(cfg, ws):
    from .communities import composition

    _graph, partition = pipeline.run_stage("cluster", cfg, ws)
    shares = composition(partition)
    print(f"clusters={len(partition.cluster_sizes)} modularity={partition.modularity:.4f}")
    for cid in sorted(partition.cluster_sizes):
        print(f"cluster {cid}: size={partition.cluster_sizes[cid]} percent={round(float(shares[cid]))}%")
    return 0


def _cmd_export(cfg, ws):
    display, table, flows = pipeline.run_stage("export", cfg, ws)
    print(f"display graph: n={display.n} L={display.edge_count}")
    print(f"table rows={len(table.rows)} flows={len(flows)}")
    print(f"wrote {ws.gexf_file}, {ws.display_gexf_file}, {ws.table_file}, {ws.flows_file}")
    return 0


def _cmd_all(cfg, ws):
    manifest = pipeline.run(cfg, ws.root)
    print(f"wrote {len(manifest['files'])} files, manifest at {ws.manifest_file}")
    return 0


_COMMANDS = {
    "ingest": _cmd_ingest,
    "superpose": _cmd_superpose,
    "themes": _cmd_themes,
    "evolve": _cmd_evolve,
    "couple": _cmd_couple,
    "metrics": _cmd_metrics,
    "cluster": _cmd_cluster,
    "export": _cmd_export,
    "all": _cmd_all,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        cfg = _resolve_config(args)
        ws = _resolve_workspace(args, cfg)
        return _COMMANDS[args.command](cfg, ws)
    except ConfigError as exc:
        print(f"error: invalid configuration: {exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"error in stage {exc.stage}: {exc}", file=sys.stderr)
        return exc.exit_code
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
