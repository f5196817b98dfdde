"""
Monthly MTG / ACG / CIG construction and DApp sub-graph extraction.
"""

from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal
from enum import Enum
from pathlib import Path
from typing import Iterable

from .errors import ContractViolation, DataError
from .model import Chain, DAppLabel, MonthKey, NodeClass, NodeId, Trace, TraceKind, month_of


class GraphKind(str, Enum):
    MTG = "MTG"
    ACG = "ACG"
    CIG = "CIG"

    @property
    def trace_kind(self) -> TraceKind:
        return _KIND_OF[self]


_KIND_OF = {
    GraphKind.MTG: TraceKind.MONEY_TRANSFER,
    GraphKind.ACG: TraceKind.ACCOUNT_CREATION,
    GraphKind.CIG: TraceKind.CONTRACT_INVOCATION,
}

# Graph kinds each chain model supports.
CHAIN_KINDS = {
    Chain.BITCOIN: (GraphKind.MTG,),
    Chain.ETHEREUM: (GraphKind.MTG, GraphKind.ACG, GraphKind.CIG),
    Chain.EOSIO: (GraphKind.MTG, GraphKind.ACG, GraphKind.CIG),
}


@dataclass
class AggregatedEdge:
    source: NodeId
    target: NodeId
    weight_sum: Decimal = Decimal(0)
    trace_count: int = 0


@dataclass
class MonthlyGraph:
    """Directed graph for one (chain, kind, month).

    Nodes map to their optional DApp label. Edges are keyed by ordered
    (source, target) pair, with successor/predecessor sets kept alongside
    so degree queries and node removal are cheap.
    """

    chain: Chain
    kind: GraphKind
    month: MonthKey
    nodes: dict[NodeId, DAppLabel | None] = field(default_factory=dict)
    edges: dict[tuple[NodeId, NodeId], AggregatedEdge] = field(default_factory=dict)
    succ: dict[NodeId, set[NodeId]] = field(default_factory=dict)
    pred: dict[NodeId, set[NodeId]] = field(default_factory=dict)

    def add_node(self, node: NodeId, label: DAppLabel | None = None) -> None:
        if node not in self.nodes:
            self.nodes[node] = label
            self.succ[node] = set()
            self.pred[node] = set()
        elif label is not None and self.nodes[node] is None:
            self.nodes[node] = label

    def add_edge(self, source: NodeId, target: NodeId, weight: Decimal, count: int = 1) -> None:
        key = (source, target)
        edge = self.edges.get(key)
        if edge is None:
            edge = self.edges[key] = AggregatedEdge(source, target)
            self.succ[source].add(target)
            self.pred[target].add(source)
        edge.weight_sum += weight
        edge.trace_count += count

    def remove_node(self, node: NodeId) -> None:
        for t in self.succ.pop(node):
            self.pred[t].discard(node)
            del self.edges[(node, t)]
        for s in self.pred.pop(node):
            if s == node:
                continue
            self.succ[s].discard(node)
            del self.edges[(s, node)]
        del self.nodes[node]

    def copy(self) -> "MonthlyGraph":
        g = MonthlyGraph(self.chain, self.kind, self.month, dict(self.nodes))
        g.edges = {k: AggregatedEdge(e.source, e.target, e.weight_sum, e.trace_count)
                   for k, e in self.edges.items()}
        g.succ = {n: set(s) for n, s in self.succ.items()}
        g.pred = {n: set(p) for n, p in self.pred.items()}
        return g

    def in_degree(self, node: NodeId) -> int:
        return len(self.pred[node])

    def out_degree(self, node: NodeId) -> int:
        return len(self.succ[node])

    def degree(self, node: NodeId) -> int:
        return len(self.pred[node]) + len(self.succ[node])

    @property
    def trace_count(self) -> int:
        return sum(e.trace_count for e in self.edges.values())

    @property
    def node_count(self) -> int:
        return len(self.nodes)

    def __len__(self):
        return len(self.nodes)


def build_graph(traces: Iterable[Trace], kind: GraphKind, month: MonthKey,
                chain: Chain | None = None) -> MonthlyGraph:
    """Aggregate one month of same-kind traces by ordered (source, target) pair."""
    expected = kind.trace_kind
    traces = list(traces)
    canon: dict[NodeId, NodeId] = {}
    for t in traces:
        if t.kind is not expected:
            raise ContractViolation(f"{t.kind.value} trace {t.tx_id}#{t.ordinal} fed to {kind.value} build")
        if month_of(t.timestamp) != month:
            raise ContractViolation(f"trace {t.tx_id}#{t.ordinal} is outside {month}")
        if chain is None:
            chain = t.chain
        elif t.chain is not chain:
            raise ContractViolation(f"trace {t.tx_id}#{t.ordinal} is from chain {t.chain.value}")
        for node in (t.source, t.target):
            # The same identity may arrive as "regular" and as something more specific.
            prev = canon.get(node)
            if prev is None or prev.node_class is NodeClass.REGULAR:
                canon[node] = node

    g = MonthlyGraph(Chain.BITCOIN if chain is None else chain, kind, month)
    unit = Decimal(1)
    for t in traces:
        s, d = canon[t.source], canon[t.target]
        g.add_node(s, t.source_label)
        g.add_node(d, t.target_label)
        g.add_edge(s, d, unit if kind is GraphKind.ACG else t.weight)
    if kind is GraphKind.ACG:
        check_acg(g)
    return g


def check_acg(g: MonthlyGraph) -> None:
    for node, preds in g.pred.items():
        if len(preds) > 1:
            raise DataError(f"account {node} created by {len(preds)} creators in {g.month}")


def build_month_graphs(traces: Iterable[Trace], chain: Chain,
                       kinds: Iterable[GraphKind] | None = None) -> dict[tuple[GraphKind, MonthKey], MonthlyGraph]:
    """Bucket traces by (kind, month) and build every graph."""
    kinds = tuple(CHAIN_KINDS[chain] if kinds is None else kinds)
    wanted = {k.trace_kind: k for k in kinds}
    buckets: dict[tuple[GraphKind, MonthKey], list[Trace]] = {}
    for t in traces:
        gk = wanted.get(t.kind)
        if gk is not None:
            buckets.setdefault((gk, month_of(t.timestamp)), []).append(t)
    return {key: build_graph(ts, key[0], key[1], chain) for key, ts in sorted(buckets.items())}


def extract_dapp_subgraph(graph: MonthlyGraph, category: str | None = None) -> MonthlyGraph:
    """Edges with at least one labeled endpoint (in `category`, if given)."""
    def hit(label: DAppLabel | None) -> bool:
        return label is not None and (category is None or label.category == category)

    sub = MonthlyGraph(graph.chain, graph.kind, graph.month)
    for (s, t), e in graph.edges.items():
        if hit(graph.nodes[s]) or hit(graph.nodes[t]):
            sub.add_node(s, graph.nodes[s])
            sub.add_node(t, graph.nodes[t])
            sub.add_edge(s, t, e.weight_sum, e.trace_count)
    return sub


@dataclass
class ShareReport:
    """Per-category share of traces in one month. None when no traces."""

    total: int
    dapp_related: int
    category_counts: dict[str, int]

    @property
    def category_shares(self) -> dict[str, float] | None:
        if self.total == 0:
            return None
        return {c: n / self.total for c, n in sorted(self.category_counts.items())}

    @property
    def non_dapp_share(self) -> float | None:
        if self.total == 0:
            return None
        return 1 - self.dapp_related / self.total


def dapp_share_report(graphs: Iterable[MonthlyGraph]) -> ShareReport:
    """Trace-count shares across the given graphs (typically a month's MTG
    and CIG). An edge touching two categories counts toward both."""
    total = related = 0
    counts: Counter = Counter()
    for g in graphs:
        for (s, t), e in g.edges.items():
            total += e.trace_count
            cats = {lab.category for lab in (g.nodes[s], g.nodes[t]) if lab is not None}
            if cats:
                related += e.trace_count
                for c in cats:
                    counts[c] += e.trace_count
    return ShareReport(total, related, dict(counts))


def dump_graph(graph: MonthlyGraph, edge_path: str | Path, node_path: str | Path) -> None:
    with open(edge_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source", "target", "weight_sum", "trace_count"])
        for (s, t) in sorted(graph.edges):
            e = graph.edges[(s, t)]
            w.writerow([s.identifier, t.identifier, str(e.weight_sum), e.trace_count])
    with open(node_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["id", "class", "dapp_name", "dapp_category"])
        for n in sorted(graph.nodes):
            lab = graph.nodes[n]
            w.writerow([n.identifier, n.node_class.value,
                        lab.name if lab else "", lab.category if lab else ""])
