"""Long-format `series,month,value` CSVs, one per figure family, built from
an analysis metrics CSV."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

from .metrics import format_value, read_metric_rows

FAMILIES = ("traces", "ratios", "roles", "alpha", "pearson", "components", "dapp_shares")
SHARE_EPSILON = 1e-9


def _family(kind: str, metric: str) -> str | None:
    if metric == "trace_count":
        return "traces"
    if metric == "trace_ratio":
        return "ratios"
    if metric.startswith("role_"):
        return "roles"
    if metric.startswith("alpha_"):
        return "alpha"
    if metric == "pearson_r":
        return "pearson"
    if metric in ("wcc", "scc"):
        return "components"
    if kind == "DAPP":
        return "dapp_shares"
    return None


def build_report(metrics_csv: str | Path, out_dir: str | Path) -> dict[str, Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    grouped: dict[str, list[tuple[str, str, float | None]]] = defaultdict(list)
    share_sums: dict[tuple[str, str], float] = defaultdict(float)
    for chain, kind, metric, month, value in read_metric_rows(metrics_csv):
        fam = _family(kind, metric)
        if fam is None:
            continue
        if fam == "roles":
            series = f"{chain}/{kind}/{metric[len('role_'):]}"
        elif fam == "dapp_shares":
            series = f"{chain}/{metric[len('share_'):]}"
            if value is not None:
                share_sums[(chain, month)] += value
        else:
            series = f"{chain}/{kind}/{metric}"
        grouped[fam].append((series, month, value))

    paths = {}
    for fam in FAMILIES:
        path = out_dir / f"{fam}.csv"
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["series", "month", "value"])
            for series, month, value in sorted(grouped[fam], key=lambda r: (r[0], r[1])):
                w.writerow([series, month, format_value(value)])
            if fam == "dapp_shares" and share_sums:
                # Category shares plus the non-DApp share cover every trace at least once.
                low = min(share_sums.values())
                w.writerow(["check/min_share_sum", "all", format_value(low)])
                w.writerow(["check/accounting_ok", "all", int(low >= 1 - SHARE_EPSILON)])
        paths[fam] = path
    return paths
