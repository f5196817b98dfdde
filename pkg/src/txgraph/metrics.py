"""
Graph metrics: trace statistics, degree distributions and their log-log
slope, indegree/outdegree Pearson correlation, and connected components.
"""

from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ContractViolation, InsufficientPoints, NotApplicable
from .graph import GraphKind, MonthlyGraph
from .model import Chain, InitiatorRole, MonthKey, Trace, TraceKind, month_range

DEGREE_MODES = ("in", "out", "total")


# ---------------------------------------------------------------- trace stats

@dataclass
class TraceStats:
    counts: dict[TraceKind, int]
    ratios: dict[TraceKind, float]
    role_split: dict[TraceKind, dict[InitiatorRole, float]]

    @property
    def total(self) -> int:
        return sum(self.counts.values())


def trace_stats(traces: Iterable[Trace]) -> TraceStats:
    counts: Counter = Counter()
    roles: dict[TraceKind, Counter] = {}
    for t in traces:
        counts[t.kind] += 1
        roles.setdefault(t.kind, Counter())[t.initiator_role] += 1
    total = sum(counts.values())
    ratios = {k: counts[k] / total for k in TraceKind if counts[k]}
    split = {
        k: {r: roles[k][r] / counts[k] for r in InitiatorRole}
        for k in TraceKind if counts[k]
    }
    return TraceStats({k: counts[k] for k in TraceKind}, ratios, split)


# ---------------------------------------------------------------- degrees

@dataclass
class DegreeHistogram:
    mode: str
    points: list[tuple[int, float]]
    node_count: int


def _degree_fn(graph: MonthlyGraph, mode: str):
    if mode == "in":
        return graph.in_degree
    if mode == "out":
        return graph.out_degree
    if mode == "total":
        return graph.degree
    raise ValueError(f"unknown degree mode {mode!r}")


def degree_histogram(graph: MonthlyGraph, mode: str) -> DegreeHistogram:
    """Proportion of nodes per nonzero degree. Degrees count distinct
    aggregated edges, so repeated traces between a pair count once."""
    deg = _degree_fn(graph, mode)
    counts = Counter(deg(n) for n in graph.nodes)
    n = len(graph.nodes)
    points = [(d, c / n) for d, c in sorted(counts.items()) if d > 0]
    return DegreeHistogram(mode, points, n)


@dataclass
class AlphaFit:
    alpha: float
    intercept: float
    point_count: int


def fit_alpha(hist: DegreeHistogram) -> AlphaFit:
    """Least-squares line through (log10 degree, log10 proportion)."""
    if len(hist.points) < 2:
        raise InsufficientPoints(f"need at least 2 distinct degrees, got {len(hist.points)}")
    xs = [math.log10(d) for d, _ in hist.points]
    ys = [math.log10(p) for _, p in hist.points]
    m = len(xs)
    mx = math.fsum(xs) / m
    my = math.fsum(ys) / m
    sxx = math.fsum((x - mx) ** 2 for x in xs)
    sxy = math.fsum((x - mx) * (y - my) for x, y in zip(xs, ys))
    slope = sxy / sxx
    return AlphaFit(slope, my - slope * mx, m)


# ---------------------------------------------------------------- pearson

@dataclass
class PearsonResult:
    r: float
    n: int


def pearson_r(graph: MonthlyGraph) -> PearsonResult | None:
    """Population correlation of (indegree, outdegree) over all nodes."""
    n = len(graph.nodes)
    if n < 2:
        return None
    sx = sy = sxx = syy = sxy = 0
    for v in graph.nodes:
        x, y = len(graph.pred[v]), len(graph.succ[v])
        sx += x
        sy += y
        sxx += x * x
        syy += y * y
        sxy += x * y
    # Integer moments keep the numerator and variances exact.
    cov = n * sxy - sx * sy
    vx = n * sxx - sx * sx
    vy = n * syy - sy * sy
    if vx == 0 or vy == 0:
        return None
    r = cov / math.sqrt(vx * vy)
    return PearsonResult(max(-1.0, min(1.0, r)), n)


# ---------------------------------------------------------------- components

def count_wcc(graph: MonthlyGraph) -> int:
    parent = {v: v for v in graph.nodes}

    def find(v):
        root = v
        while parent[root] != root:
            root = parent[root]
        while parent[v] != root:
            parent[v], v = root, parent[v]
        return root

    components = len(parent)
    for s, t in graph.edges:
        rs, rt = find(s), find(t)
        if rs != rt:
            parent[rs] = rt
            components -= 1
    return components


def count_scc(graph: MonthlyGraph) -> int:
    """Number of strongly connected components (iterative Tarjan)."""
    if graph.chain is Chain.BITCOIN and graph.kind is GraphKind.MTG:
        raise NotApplicable("SCC is not defined for Bitcoin MTGs: txid nodes make every edge one-way")
    index: dict = {}
    low: dict = {}
    on_stack: set = set()
    stack: list = []
    counter = 0
    components = 0
    succ = graph.succ
    for root in graph.nodes:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if advanced:
                continue
            work.pop()
            if work:
                u = work[-1][0]
                if low[v] < low[u]:
                    low[u] = low[v]
            if low[v] == index[v]:
                components += 1
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    if w == v:
                        break
    return components


# ---------------------------------------------------------------- series

@dataclass
class MetricSeries:
    chain: Chain
    kind: str
    metric: str
    points: list[tuple[MonthKey, float | None]] = field(default_factory=list)

    @property
    def months(self) -> list[MonthKey]:
        return [m for m, _ in self.points]

    @property
    def values(self) -> list[float | None]:
        return [v for _, v in self.points]

    def index_of(self, month: MonthKey) -> int:
        if not self.points:
            raise KeyError(month)
        i = month.ordinal - self.points[0][0].ordinal
        if not 0 <= i < len(self.points):
            raise KeyError(month)
        return i

    def __len__(self):
        return len(self.points)


def assemble_series(values: Iterable[tuple[MonthKey, float | None]], chain: Chain = Chain.BITCOIN,
                    kind: str = "", metric: str = "",
                    span: tuple[MonthKey, MonthKey] | None = None) -> MetricSeries:
    """Gap-free ascending series; months without a value hold None.

    `span` widens (or fixes) the covered range; values outside it are dropped.
    """
    table: dict[MonthKey, float | None] = {}
    for month, v in values:
        if month in table:
            raise ContractViolation(f"duplicate month {month} in {metric or 'series'}")
        table[month] = v
    if span is None:
        if not table:
            return MetricSeries(chain, kind, metric, [])
        span = (min(table), max(table))
    return MetricSeries(chain, kind, metric, [(m, table.get(m)) for m in month_range(*span)])


# ---------------------------------------------------------------- per-graph metric table

def _alpha(mode):
    def compute(g: MonthlyGraph) -> float | None:
        try:
            return fit_alpha(degree_histogram(g, mode)).alpha
        except InsufficientPoints:
            return None
    return compute


def _pearson(g: MonthlyGraph) -> float | None:
    res = pearson_r(g)
    return None if res is None else res.r


GRAPH_METRICS = {
    "trace_count": lambda g: g.trace_count,
    "alpha_in": _alpha("in"),
    "alpha_out": _alpha("out"),
    "alpha_total": _alpha("total"),
    "pearson_r": _pearson,
    "wcc": count_wcc,
    "scc": count_scc,
}


def applicable_metrics(chain: Chain, kind: GraphKind) -> list[str]:
    names = list(GRAPH_METRICS)
    if chain is Chain.BITCOIN and kind is GraphKind.MTG:
        names.remove("scc")
    return names


def compute_metric(graph: MonthlyGraph, metric: str) -> float | None:
    try:
        fn = GRAPH_METRICS[metric]
    except KeyError:
        raise ValueError(f"unknown metric {metric!r}") from None
    return fn(graph)


def format_value(v: float | int | None) -> str:
    if v is None:
        return ""
    if isinstance(v, int):
        return str(v)
    if float(v).is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(float(v))


def write_metric_rows(rows: Sequence[tuple[str, str, str, str, float | None]], path: str | Path) -> None:
    """CSV with header chain,graph_kind,metric,month,value."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "graph_kind", "metric", "month", "value"])
        for chain, kind, metric, month, value in rows:
            w.writerow([chain, kind, metric, month, format_value(value)])


def read_metric_rows(path: str | Path) -> list[tuple[str, str, str, str, float | None]]:
    with open(path, newline="", encoding="utf-8") as fh:
        return [(r["chain"], r["graph_kind"], r["metric"], r["month"],
                 float(r["value"]) if r["value"] != "" else None)
                for r in csv.DictReader(fh)]
