"""
Spam-advertisement detection over one month's MTG/CIG, plus creation
family trees built from the union of ACGs.

An account N is flagged when, within one month:
  R1  total amount N sent / number of distinct recipients <= x
  R2  N sent at most y transfers to every recipient
  R3  more than z recipients sent neither a transfer nor an invocation back to N
  R4  at least z of those silent recipients got the same memo from N
"""

from __future__ import annotations

import csv
import json
from collections import defaultdict
from dataclasses import dataclass, field
from decimal import Decimal
from pathlib import Path
from typing import Iterable

from .errors import ContractViolation, DataError
from .graph import MonthlyGraph
from .model import MonthKey, NodeId, Trace, TraceKind


@dataclass(frozen=True)
class SpamParams:
    x: Decimal = Decimal("0.001")
    y: int = 30
    z: int = 500
    require_memo: bool = True

    def __post_init__(self):
        if not isinstance(self.x, Decimal):
            object.__setattr__(self, "x", Decimal(str(self.x)))
        if self.x <= 0 or self.y < 1 or self.z < 1:
            raise ValueError(f"invalid spam parameters x={self.x} y={self.y} z={self.z}")


@dataclass
class SpamVerdict:
    account: NodeId
    month: MonthKey
    recipients: int
    non_repliers: int
    avg_amount: Decimal
    max_tm_per_recipient: int
    memo_groups: list[tuple[str, int]]
    rules_passed: set[str]

    def as_dict(self) -> dict:
        return {
            "account": self.account.identifier,
            "chain": self.account.chain.value,
            "month": str(self.month),
            "recipients": self.recipients,
            "non_repliers": self.non_repliers,
            "avg_amount": str(self.avg_amount),
            "max_tm_per_recipient": self.max_tm_per_recipient,
            "memo_groups": [[m, c] for m, c in self.memo_groups],
            "rules_passed": sorted(self.rules_passed),
        }


def scan_spammers(mtg: MonthlyGraph, cig: MonthlyGraph | None, traces: Iterable[Trace],
                  params: SpamParams = SpamParams()) -> list[SpamVerdict]:
    if cig is not None and (cig.chain is not mtg.chain or cig.month != mtg.month):
        raise ContractViolation("MTG and CIG must share chain and month")

    # R3 needs more than z recipients, so smaller senders can be skipped outright.
    candidates = sorted(v for v in mtg.nodes if len(mtg.succ[v]) > params.z)
    if not candidates:
        return []
    wanted = set(candidates)
    memos: dict[NodeId, dict[str, set[NodeId]]] = defaultdict(lambda: defaultdict(set))
    for t in traces:
        if t.kind is TraceKind.MONEY_TRANSFER and t.source in wanted and t.memo:
            memos[t.source][t.memo].add(t.target)

    cig_edges = cig.edges if cig is not None else {}
    verdicts = []
    for n in candidates:
        recipients = mtg.succ[n]
        out_edges = [mtg.edges[(n, r)] for r in recipients]
        total = sum((e.weight_sum for e in out_edges), Decimal(0))
        avg = total / len(recipients)
        max_tm = max(e.trace_count for e in out_edges)
        silent = {r for r in recipients if (r, n) not in mtg.edges and (r, n) not in cig_edges}
        groups = sorted(
            ((memo, len(rs & silent)) for memo, rs in memos.get(n, {}).items()),
            key=lambda mc: (-mc[1], mc[0]),
        )
        groups = [g for g in groups if g[1] > 0]

        passed = set()
        if avg <= params.x:
            passed.add("R1")
        if max_tm <= params.y:
            passed.add("R2")
        if len(silent) > params.z:
            passed.add("R3")
        if groups and groups[0][1] >= params.z:
            passed.add("R4")
        required = {"R1", "R2", "R3"} | ({"R4"} if params.require_memo else set())
        if required <= passed:
            verdicts.append(SpamVerdict(n, mtg.month, len(recipients), len(silent), avg,
                                        max_tm, groups, passed))
    return verdicts


def spam_timeline(verdicts: Iterable[SpamVerdict]) -> dict[MonthKey, int]:
    """Number of accounts first flagged in each month."""
    first: dict[NodeId, MonthKey] = {}
    for v in verdicts:
        if v.account not in first or v.month < first[v.account]:
            first[v.account] = v.month
    counts: dict[MonthKey, int] = defaultdict(int)
    for month in first.values():
        counts[month] += 1
    return dict(sorted(counts.items()))


@dataclass
class FamilyTree:
    parent: dict[NodeId, NodeId] = field(default_factory=dict)
    children: dict[NodeId, list[NodeId]] = field(default_factory=dict)
    flagged: set[NodeId] = field(default_factory=set)
    size: dict[NodeId, int] = field(default_factory=dict)
    flagged_below: dict[NodeId, int] = field(default_factory=dict)

    @property
    def roots(self) -> list[NodeId]:
        return sorted(n for n in self.children if n not in self.parent)

    def proportion(self, node: NodeId) -> float:
        """Flagged share of the subtree rooted at `node` (node included)."""
        return self.flagged_below[node] / self.size[node]

    def edges(self) -> list[tuple[NodeId, NodeId, bool]]:
        return sorted((p, c, c in self.flagged) for c, p in self.parent.items())


def build_family_tree(acgs: Iterable[MonthlyGraph], flagged: Iterable[NodeId] = ()) -> FamilyTree:
    """Creation forest over the union of the given account-creation graphs."""
    tree = FamilyTree(flagged=set(flagged))
    for g in acgs:
        for (p, c) in g.edges:
            old = tree.parent.get(c)
            if old is not None and old != p:
                raise DataError(f"account {c} has two creators: {old} and {p}")
            tree.parent[c] = p
            tree.children.setdefault(p, [])
            tree.children.setdefault(c, [])
    for p, c in sorted((p, c) for c, p in tree.parent.items()):
        tree.children[p].append(c)

    # Post-order accumulation from every root.
    for root in tree.roots:
        stack = [(root, False)]
        while stack:
            node, done = stack.pop()
            if done:
                tree.size[node] = 1 + sum(tree.size[c] for c in tree.children[node])
                tree.flagged_below[node] = (node in tree.flagged) + sum(
                    tree.flagged_below[c] for c in tree.children[node])
                continue
            stack.append((node, True))
            stack.extend((c, False) for c in tree.children[node])
    if len(tree.size) != len(tree.children):
        raise DataError("creation relation contains a cycle")
    return tree


def write_spam_report(verdicts: Iterable[SpamVerdict], path: str | Path) -> None:
    data = [v.as_dict() for v in verdicts]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(data, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_family_tree(tree: FamilyTree, path: str | Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["parent", "child", "flagged"])
        for p, c, flag in tree.edges():
            w.writerow([p.identifier, c.identifier, int(flag)])
