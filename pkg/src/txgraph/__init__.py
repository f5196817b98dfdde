"""Monthly transaction-graph analytics for UTXO, account-model and
action-model blockchains."""

from .graph import GraphKind, MonthlyGraph, build_graph, dapp_share_report, extract_dapp_subgraph
from .metrics import (
    count_scc, count_wcc, degree_histogram, fit_alpha, pearson_r, trace_stats,
)
from .model import Chain, MonthKey, NodeId, Trace, TraceKind, month_of, month_range

__version__ = "0.1.0"

__all__ = [
    "Chain", "GraphKind", "MonthKey", "MonthlyGraph", "NodeId", "Trace", "TraceKind",
    "build_graph", "count_scc", "count_wcc", "dapp_share_report", "degree_histogram",
    "extract_dapp_subgraph", "fit_alpha", "month_of", "month_range", "pearson_r", "trace_stats",
]
