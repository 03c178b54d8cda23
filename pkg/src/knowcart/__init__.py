"""knowcart: science-mapping toolkit for bibliographic export files.

Parses bibliographic CSV exports into a corpus, tracks keyword vocabulary
across time periods, detects keyword themes and their evolution, builds the
reference-coupling network between articles, computes network centralities,
partitions the network into communities, and writes renderer-ready report
files (GEXF, CSV, JSON) plus summary charts.
"""

from .communities import Partition, composition, detect_communities, filter_top_betweenness, modularity, top_clusters
from .coupling import NetworkSummary, RefIndex, build_bcn, build_ref_index, coupling_strength, network_summary
from .cowords import (
    CooccurrenceMatrix,
    EvolutionMap,
    PeriodKeywordSet,
    SuperpositionStep,
    Theme,
    cooccurrence,
    detect_themes,
    equivalence_index,
    evolution_map,
    inclusion_index,
    keywords_by_period,
    superposition,
)
from .graphs import (
    CentralityReport,
    EigenResult,
    Graph,
    betweenness_all,
    closeness,
    compute_report,
    degree,
    density,
    eigencentrality,
    largest_component,
    mean_degree,
)
from .pipeline import PipelineConfig, Workspace, run
from .records import (
    BibRecord,
    Corpus,
    PeriodSlicing,
    TitleQuery,
    dedup,
    filter_by_title,
    normalize_keyword,
    parse_export,
    reference_key,
    slice_periods,
)

__version__ = "0.1.0"
