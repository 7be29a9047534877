"""Crowdsourced side-effect knowledge graphs.

Pipeline stages: flatten and clean discussion dumps, extract
medication→side-effect relations with a completion provider (replay
cached for determinism), consolidate raw terms into canonical ones,
assemble a weighted bipartite graph with a JSON viewer export, and
compare crowdsourced term frequencies against a registry summary with
closed-form binomial regression.
"""

from .errors import (
    BrandWhitelistError,
    ConfigurationError,
    DataError,
    FaersFormatError,
    OverrideCycleError,
    PipelineError,
    ProviderContractError,
    ProviderError,
    ResponseFormatError,
    ThreadStructureError,
)
from .extract import (
    Brand,
    Relation,
    build_prompt,
    canonical_brand,
    dedupe_records,
    extract_corpus,
    extract_relations,
    parse_response,
)
from .graph import (
    KnowledgeGraph,
    RenderParams,
    build_graph,
    edge_thickness,
    export_viewer_document,
    node_radius,
    parse_viewer_document,
)
from .ingest import (
    FaersSummary,
    FilterConfig,
    RawItem,
    filter_items,
    flatten_thread,
    load_faers,
    save_faers,
)
from .normalize import (
    CanonicalGroup,
    CanonicalMap,
    TermEmbedding,
    apply_canonical_map,
    compose_canonical_map,
    effective_map,
    embed_terms,
    group_by_threshold,
    llm_cluster,
    load_overrides,
)
from .providers import (
    HttpEmbeddingProvider,
    HttpLLMProvider,
    ReplayCache,
    RetryPolicy,
    cached_complete,
    cached_embed,
)
from .stats import (
    ComparisonResult,
    ComparisonRow,
    MatchMap,
    SourceCounts,
    TestResult,
    bonferroni,
    compare,
    combine_faers,
    frequency,
    logor_test,
    reddit_term_counts,
    sample_for_eval,
    score_annotations,
    spearman,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
