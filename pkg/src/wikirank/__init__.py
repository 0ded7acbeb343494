"""Social-impact-weighted link analysis for Wikipedia-style networks.

Builds directed article graphs from dumps, clickstreams, and pageview
logs, then ranks articles with PageRank, CheiRank, and the combined
two-dimensional rank under three weighting models: bare links (nowc),
click-weighted links (wc), and click-weighted links with
pageview-proportional teleportation (wcpv).
"""

from __future__ import annotations

__version__ = "0.1.0"

from .analysis import (
    DensityGrid,
    OverlapCurve,
    TopTable,
    density_grid,
    overlap,
    top_table,
)
from .graph import (
    EdgeSet,
    GraphCounts,
    NodeRegistry,
    RedirectMap,
    attach_clicks,
    dedup_and_filter,
    exclude_nodes,
    load_graph,
    merge_multilingual,
    resolve_redirects,
    save_graph,
)
from .ingest import (
    ClickRecord,
    LinkType,
    PageviewRecord,
    RawLinkRecord,
    RedirectRecord,
    normalize_title,
    parse_clickstream,
    parse_pageviews,
    parse_pairs,
    parse_redirects,
    parse_sql_insert_tuples,
    parse_wikicode_links,
    parse_wikicode_pages,
)
from .matrix import (
    GoogleMatrixSpec,
    Model,
    StochasticMatrix,
    TeleportVector,
    WeightedAdjacency,
    aggregate_views,
    assemble,
    build_weighted_adjacency,
    column_normalize,
    reverse,
    teleport_from_pageviews,
)
from .rank import (
    NonConvergenceError,
    RankingList,
    RankVector,
    cheirank,
    incoming_click_totals,
    pagerank,
    rank_from_scores,
    two_d_rank,
)

__all__ = [
    "__version__",
    "ClickRecord",
    "DensityGrid",
    "EdgeSet",
    "GoogleMatrixSpec",
    "GraphCounts",
    "LinkType",
    "Model",
    "NodeRegistry",
    "NonConvergenceError",
    "OverlapCurve",
    "PageviewRecord",
    "RankVector",
    "RankingList",
    "RawLinkRecord",
    "RedirectMap",
    "RedirectRecord",
    "StochasticMatrix",
    "TeleportVector",
    "TopTable",
    "WeightedAdjacency",
    "aggregate_views",
    "assemble",
    "attach_clicks",
    "build_weighted_adjacency",
    "cheirank",
    "column_normalize",
    "dedup_and_filter",
    "density_grid",
    "exclude_nodes",
    "incoming_click_totals",
    "load_graph",
    "merge_multilingual",
    "normalize_title",
    "overlap",
    "pagerank",
    "parse_clickstream",
    "parse_pageviews",
    "parse_pairs",
    "parse_redirects",
    "parse_sql_insert_tuples",
    "parse_wikicode_links",
    "parse_wikicode_pages",
    "rank_from_scores",
    "resolve_redirects",
    "reverse",
    "save_graph",
    "teleport_from_pageviews",
    "top_table",
    "two_d_rank",
]
