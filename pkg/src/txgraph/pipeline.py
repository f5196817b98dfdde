"""
End-to-end analysis: traces -> monthly graphs -> metric rows, outlier
records, spam verdicts. Every output is sorted so reruns are byte-identical.
"""

from __future__ import annotations

import csv
import logging
from collections import defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import AttributionError, DataError
from .graph import CHAIN_KINDS, GraphKind, MonthlyGraph, build_graph, dapp_share_report
from .ingest import DAppRegistry, label_traces
from .metrics import (
    MetricSeries, applicable_metrics, assemble_series, compute_metric, trace_stats,
)
from .model import Chain, InitiatorRole, MonthKey, Trace, TraceKind, month_of, month_range
from .outlier import (
    DEFAULT_MAX_ITER, DEFAULT_THRESHOLD, OutlierRecord, attribute, classify, detect,
)
from .spam import FamilyTree, SpamParams, SpamVerdict, build_family_tree, scan_spammers, spam_timeline

log = logging.getLogger(__name__)

Row = tuple[str, str, str, str, "float | int | None"]


@dataclass
class ChainMonths:
    """One chain's traces and graphs bucketed by month."""

    chain: Chain
    months: list[MonthKey]
    traces: dict[MonthKey, list[Trace]] = field(default_factory=dict)
    graphs: dict[tuple[GraphKind, MonthKey], MonthlyGraph] = field(default_factory=dict)

    def graph(self, kind: GraphKind, month: MonthKey) -> MonthlyGraph | None:
        return self.graphs.get((kind, month))


def bucket(traces: Iterable[Trace], chain: Chain, first: MonthKey | None = None,
           last: MonthKey | None = None) -> ChainMonths:
    by_month: dict[MonthKey, list[Trace]] = defaultdict(list)
    for t in traces:
        if t.chain is chain:
            by_month[month_of(t.timestamp)].append(t)
    if first is None:
        first = min(by_month) if by_month else None
    if last is None:
        last = max(by_month) if by_month else None
    months = [] if first is None or last is None else month_range(first, last)
    cm = ChainMonths(chain, months)
    for m in months:
        ts = sorted(by_month.get(m, []), key=lambda t: (t.timestamp, t.tx_id, t.ordinal))
        if not ts:
            log.warning("%s: no traces in %s; metrics for this month are absent", chain.value, m)
        cm.traces[m] = ts
        for kind in CHAIN_KINDS[chain]:
            sel = [t for t in ts if t.kind is kind.trace_kind]
            if sel:
                cm.graphs[(kind, m)] = build_graph(sel, kind, m, chain)
    return cm


# ---------------------------------------------------------------- metrics

def metric_rows(cm: ChainMonths, with_shares: bool = False) -> tuple[list[Row], dict[tuple[str, str], MetricSeries]]:
    rows: list[Row] = []
    series: dict[tuple[str, str], MetricSeries] = {}
    c = cm.chain.value
    span = (cm.months[0], cm.months[-1]) if cm.months else None

    for kind in CHAIN_KINDS[cm.chain]:
        for metric in applicable_metrics(cm.chain, kind):
            values = []
            for m in cm.months:
                g = cm.graph(kind, m)
                values.append((m, None if g is None else compute_metric(g, metric)))
            s = assemble_series(values, cm.chain, kind.value, metric, span) if span else \
                MetricSeries(cm.chain, kind.value, metric)
            series[(kind.value, metric)] = s
            rows.extend((c, kind.value, metric, str(m), v) for m, v in s.points)

    for m in cm.months:
        stats = trace_stats(cm.traces[m])
        for kind in CHAIN_KINDS[cm.chain]:
            tk = kind.trace_kind
            rows.append((c, kind.value, "trace_ratio", str(m), stats.ratios.get(tk)))
            split = stats.role_split.get(tk)
            for role in InitiatorRole:
                rows.append((c, kind.value, f"role_{role.value}", str(m),
                             None if split is None else split[role]))
        if with_shares:
            gs = [g for k in (GraphKind.MTG, GraphKind.CIG) if (g := cm.graph(k, m)) is not None]
            rep = dapp_share_report(gs)
            shares = rep.category_shares
            for cat in sorted(rep.category_counts):
                rows.append((c, "DAPP", f"share_{cat}", str(m), None if shares is None else shares[cat]))
            rows.append((c, "DAPP", "share_non_dapp", str(m), rep.non_dapp_share))

    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3]))
    return rows, series


# ---------------------------------------------------------------- outliers

def find_outliers(cm: ChainMonths, series: dict[tuple[str, str], MetricSeries],
                  threshold: float = DEFAULT_THRESHOLD, max_iter: int = DEFAULT_MAX_ITER,
                  labels: dict | None = None) -> list[OutlierRecord]:
    records = []
    for (kind_name, metric), s in sorted(series.items()):
        kind = GraphKind(kind_name)
        for hit in detect(s, threshold):
            g = cm.graph(kind, hit.month)
            if g is None:
                continue
            try:
                rec = attribute(g, metric, s, threshold, max_iter)
            except AttributionError as exc:
                log.warning("skipping attribution: %s", exc)
                continue
            if not rec.resolved:
                log.warning("%s %s %s %s unresolved after %d removals",
                            cm.chain.value, kind_name, metric, hit.month, rec.iterations)
            if labels is not None:
                classify(rec, labels)
            records.append(rec)
    records.sort(key=lambda r: (r.chain.value, r.graph_kind, r.metric, r.month))
    return records


# ---------------------------------------------------------------- spam

def find_spammers(cm: ChainMonths, params: SpamParams) -> list[SpamVerdict]:
    verdicts = []
    for m in cm.months:
        mtg = cm.graph(GraphKind.MTG, m)
        if mtg is None:
            continue
        cig = cm.graph(GraphKind.CIG, m)
        mt = [t for t in cm.traces[m] if t.kind is TraceKind.MONEY_TRANSFER]
        verdicts.extend(scan_spammers(mtg, cig, mt, params))
    verdicts.sort(key=lambda v: (v.month, v.account))
    return verdicts


def family_tree(cm: ChainMonths, verdicts: Iterable[SpamVerdict]) -> FamilyTree | None:
    acgs = [g for (k, _), g in sorted(cm.graphs.items()) if k is GraphKind.ACG]
    if not acgs:
        return None
    try:
        return build_family_tree(acgs, {v.account for v in verdicts})
    except DataError as exc:
        log.warning("%s: family tree skipped: %s", cm.chain.value, exc)
        return None


# ---------------------------------------------------------------- whole run

@dataclass
class AnalysisResult:
    rows: list[Row] = field(default_factory=list)
    outliers: list[OutlierRecord] = field(default_factory=list)
    verdicts: list[SpamVerdict] = field(default_factory=list)
    trees: dict[Chain, FamilyTree] = field(default_factory=dict)

    def timeline(self) -> dict[tuple[Chain, MonthKey], int]:
        out = {}
        for chain in sorted({v.account.chain for v in self.verdicts}):
            for m, n in spam_timeline(v for v in self.verdicts if v.account.chain is chain).items():
                out[(chain, m)] = n
        return out


def analyze(traces: list[Trace], chains: Iterable[Chain] | None = None,
            first: MonthKey | None = None, last: MonthKey | None = None,
            registry: DAppRegistry | None = None, threshold: float = DEFAULT_THRESHOLD,
            max_iter: int = DEFAULT_MAX_ITER, spam_params: SpamParams = SpamParams(),
            labels: dict | None = None) -> AnalysisResult:
    if registry is not None:
        traces = label_traces(traces, registry)
    present = sorted({t.chain for t in traces}) if chains is None else sorted(set(chains))
    result = AnalysisResult()
    for chain in present:
        cm = bucket(traces, chain, first, last)
        rows, series = metric_rows(cm, with_shares=registry is not None)
        result.rows.extend(rows)
        result.outliers.extend(find_outliers(cm, series, threshold, max_iter, labels))
        verdicts = find_spammers(cm, spam_params)
        result.verdicts.extend(verdicts)
        tree = family_tree(cm, verdicts)
        if tree is not None:
            result.trees[chain] = tree
    return result


def write_timeline(timeline: dict[tuple[Chain, MonthKey], int], path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["chain", "month", "first_seen_accounts"])
        for (chain, m), n in sorted(timeline.items()):
            w.writerow([chain.value, str(m), n])
