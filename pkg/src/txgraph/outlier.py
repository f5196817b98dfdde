"""
Sliding-window z-scores over metric series and responsible-node attribution.

A month's z-score compares its value against the 7-value window centred on
it (three months either side). Attribution repeatedly removes the node a
metric-specific strategy blames until the month's z falls under threshold.
"""

from __future__ import annotations

import csv
import json
import statistics
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable

from .errors import AttributionError, ContractViolation, LabelsError
from .graph import MonthlyGraph
from .metrics import MetricSeries, compute_metric
from .model import Chain, MonthKey, NodeId

HALF_WINDOW = 3
DEFAULT_THRESHOLD = 2.5
DEFAULT_MAX_ITER = 50

OUTLIER_CATEGORIES = {
    "KillerDApp": ("DeFi", "Exchange", "Gambling", "Game", "Platform", "Token", "Tool"),
    "Misbehavior": ("Attack", "ResourceManipulation", "Spam"),
}


@dataclass(frozen=True)
class ZScorePoint:
    month: MonthKey
    value: float
    mean: float
    std: float
    z: float


def _window_z(window: list[float], centre: float) -> tuple[float, float, float]:
    mean = statistics.fmean(window)
    std = statistics.pstdev(window, mu=mean)
    z = 0.0 if std == 0 else (centre - mean) / std
    return mean, std, z


def zscore(series: MetricSeries | list, index: int) -> ZScorePoint | None:
    """z of the value at `index` against its 7-value window, or None when the
    window runs off either end or holds an absent value."""
    points = series.points if isinstance(series, MetricSeries) else series
    lo, hi = index - HALF_WINDOW, index + HALF_WINDOW
    if lo < 0 or hi >= len(points):
        return None
    window = [v for _, v in points[lo:hi + 1]]
    if any(v is None for v in window):
        return None
    window = [float(v) for v in window]
    mean, std, z = _window_z(window, window[HALF_WINDOW])
    return ZScorePoint(points[index][0], window[HALF_WINDOW], mean, std, z)


@dataclass(frozen=True)
class Detection:
    month: MonthKey
    z: float
    direction: str


def detect(series: MetricSeries, threshold: float = DEFAULT_THRESHOLD) -> list[Detection]:
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    found = []
    for i in range(len(series.points)):
        p = zscore(series, i)
        if p is not None and abs(p.z) >= threshold:
            found.append(Detection(p.month, p.z, "peak" if p.z > 0 else "trough"))
    return found


# ---------------------------------------------------------------- strategies

def _weighted_degree(g: MonthlyGraph, v: NodeId) -> int:
    total = sum(g.edges[(v, t)].trace_count for t in g.succ[v])
    total += sum(g.edges[(s, v)].trace_count for s in g.pred[v] if s != v)
    return total


def _small_neighbour_count(g: MonthlyGraph, v: NodeId) -> int:
    return sum(1 for u in (g.succ[v] | g.pred[v]) if u != v and g.degree(u) == 1)


def _one_way_pairs(g: MonthlyGraph, v: NodeId) -> int:
    return len((g.succ[v] ^ g.pred[v]) - {v})


def _two_way_pairs(g: MonthlyGraph, v: NodeId) -> int:
    return len((g.succ[v] & g.pred[v]) - {v})


def strategy_for(metric: str, direction: str) -> Callable[[MonthlyGraph, NodeId], int]:
    """Score function whose maximiser is blamed for an outlier."""
    if metric == "trace_count":
        return _weighted_degree
    if metric.startswith("alpha_"):
        if direction == "trough":
            return _small_neighbour_count
        mode = metric[len("alpha_"):]
        return {
            "in": lambda g, v: g.in_degree(v),
            "out": lambda g, v: g.out_degree(v),
            "total": lambda g, v: g.degree(v),
        }[mode]
    if metric == "pearson_r":
        return lambda g, v: g.in_degree(v) * g.out_degree(v)
    if metric == "wcc":
        return _one_way_pairs
    if metric == "scc":
        return _two_way_pairs
    raise ValueError(f"no attribution strategy for metric {metric!r}")


def select_node(g: MonthlyGraph, score: Callable[[MonthlyGraph, NodeId], int]) -> NodeId:
    # Highest score; ties go to the lexicographically smallest node.
    return min(g.nodes, key=lambda v: (-score(g, v), v))


# ---------------------------------------------------------------- attribution

def remove_responsible(g: MonthlyGraph, node: NodeId) -> None:
    """Drop `node`, its edges, and any neighbour left without edges: graph
    nodes are trace endpoints, and an orphaned neighbour no longer is one."""
    neighbours = (g.succ[node] | g.pred[node]) - {node}
    g.remove_node(node)
    for u in neighbours:
        if not g.succ[u] and not g.pred[u]:
            g.remove_node(u)


@dataclass
class OutlierRecord:
    chain: Chain
    graph_kind: str
    metric: str
    month: MonthKey
    z: float
    direction: str
    responsible_nodes: list[NodeId] = field(default_factory=list)
    iterations: int = 0
    resolved: bool = False
    final_z: float | None = None
    category: str | None = None

    def as_dict(self) -> dict:
        return {
            "chain": self.chain.value,
            "graph_kind": self.graph_kind,
            "metric": self.metric,
            "month": str(self.month),
            "z": self.z,
            "direction": self.direction,
            "responsible_nodes": [n.identifier for n in self.responsible_nodes],
            "iterations": self.iterations,
            "resolved": self.resolved,
            "final_z": self.final_z,
            "category": self.category,
        }


def attribute(graph: MonthlyGraph, metric: str, series: MetricSeries,
              threshold: float = DEFAULT_THRESHOLD,
              max_iter: int = DEFAULT_MAX_ITER) -> OutlierRecord:
    """Strip blamed nodes from a copy of `graph` until the month's z-score,
    recomputed against the otherwise unchanged window, drops under threshold."""
    if not graph.nodes:
        raise AttributionError(f"cannot attribute on empty graph {graph.kind.value} {graph.month}")
    try:
        idx = series.index_of(graph.month)
    except KeyError:
        raise ContractViolation(f"{graph.month} is not covered by series {series.metric}") from None
    point = zscore(series, idx)
    if point is None or abs(point.z) < threshold:
        raise ContractViolation(f"{series.metric} at {graph.month} is not flagged at |z| >= {threshold}")

    direction = "peak" if point.z > 0 else "trough"
    window = [float(v) for v in series.values[idx - HALF_WINDOW: idx + HALF_WINDOW + 1]]
    score = strategy_for(metric, direction)
    record = OutlierRecord(graph.chain, graph.kind.value, metric, graph.month, point.z, direction)

    g = graph.copy()
    while record.iterations < max_iter and g.nodes:
        node = select_node(g, score)
        remove_responsible(g, node)
        record.responsible_nodes.append(node)
        record.iterations += 1
        value = compute_metric(g, metric) if g.nodes else None
        if value is None:
            # Metric undefined on what is left; nothing more to recompute against.
            record.final_z = None
            break
        window[HALF_WINDOW] = float(value)
        record.final_z = _window_z(window, window[HALF_WINDOW])[2]
        if abs(record.final_z) < threshold:
            record.resolved = True
            break
    return record


def replay_z(graph: MonthlyGraph, record: OutlierRecord, series: MetricSeries) -> float | None:
    """Recompute the month's z after removing the record's nodes from a fresh copy."""
    g = graph.copy()
    for n in record.responsible_nodes:
        remove_responsible(g, n)
    value = compute_metric(g, record.metric) if g.nodes else None
    if value is None:
        return None
    idx = series.index_of(graph.month)
    window = [float(v) for v in series.values[idx - HALF_WINDOW: idx + HALF_WINDOW + 1]]
    window[HALF_WINDOW] = float(value)
    return _window_z(window, window[HALF_WINDOW])[2]


# ---------------------------------------------------------------- labels

def load_outlier_labels(path: str | Path) -> dict[tuple[Chain, str], str]:
    """CSV chain,identifier,category,subcategory -> {(chain, id): "Category:Sub"}."""
    labels = {}
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.DictReader(fh)
            need = {"chain", "identifier", "category", "subcategory"}
            if reader.fieldnames is not None and not need <= set(reader.fieldnames):
                raise LabelsError(f"{path}: expected columns {sorted(need)}")
            for lineno, row in enumerate(reader, start=2):
                cat, sub = (row["category"] or "").strip(), (row["subcategory"] or "").strip()
                if sub not in OUTLIER_CATEGORIES.get(cat, ()):
                    raise LabelsError(f"{path}:{lineno}: unknown outlier label {cat}:{sub}")
                try:
                    chain = Chain.parse(row["chain"] or "")
                except ValueError as exc:
                    raise LabelsError(f"{path}:{lineno}: {exc}") from None
                labels[(chain, (row["identifier"] or "").strip())] = f"{cat}:{sub}"
    except (UnicodeDecodeError, csv.Error) as exc:
        raise LabelsError(f"{path}: {exc}") from None
    return labels


def classify(record: OutlierRecord, labels: dict[tuple[Chain, str], str] | str | Path) -> OutlierRecord:
    if not isinstance(labels, dict):
        labels = load_outlier_labels(labels)
    record.category = None
    for node in record.responsible_nodes:
        label = labels.get((node.chain, node.identifier))
        if label is not None:
            record.category = label
            break
    return record


def write_outlier_report(records: Iterable[OutlierRecord], path: str | Path) -> None:
    data = [r.as_dict() for r in records]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")
