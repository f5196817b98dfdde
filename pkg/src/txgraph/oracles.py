"""
Slow reference implementations used to cross-check the production metrics
and the spam detector. They take plain node/edge lists or raw traces and
deliberately share no code with the modules they check.
"""

from __future__ import annotations

import math
from collections import defaultdict
from decimal import Decimal

MAX_NODES = 1000


class OracleTooLarge(ValueError):
    pass


def _check(nodes):
    if len(nodes) > MAX_NODES:
        raise OracleTooLarge(f"oracle refuses {len(nodes)} nodes (limit {MAX_NODES})")


def brute_wcc(nodes, edges) -> int:
    """Undirected DFS component count."""
    nodes = list(nodes)
    _check(nodes)
    adj = {v: [] for v in nodes}
    for s, t in edges:
        adj[s].append(t)
        adj[t].append(s)
    seen = set()
    count = 0
    for v in nodes:
        if v in seen:
            continue
        count += 1
        todo = [v]
        seen.add(v)
        while todo:
            u = todo.pop()
            for w in adj[u]:
                if w not in seen:
                    seen.add(w)
                    todo.append(w)
    return count


def brute_scc(nodes, edges) -> int:
    """Equivalence classes of mutual reachability from a full transitive closure."""
    nodes = list(nodes)
    _check(nodes)
    idx = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    # reach[i] is a bitmask of nodes reachable from i (reflexive).
    reach = [1 << i for i in range(n)]
    for s, t in edges:
        reach[idx[s]] |= 1 << idx[t]
    for k in range(n):
        bit = 1 << k
        rk = reach[k]
        for i in range(n):
            if reach[i] & bit:
                reach[i] |= rk
    # Mutually reachable nodes have identical reflexive closures, and vice versa.
    return len(set(reach))


def brute_pearson(pairs) -> float | None:
    """Population Pearson r straight from the textbook formula."""
    pairs = list(pairs)
    _check(pairs)
    n = len(pairs)
    if n < 2:
        return None
    mx = sum(x for x, _ in pairs) / n
    my = sum(y for _, y in pairs) / n
    cov = sum((x - mx) * (y - my) for x, y in pairs) / n
    vx = sum((x - mx) ** 2 for x, _ in pairs) / n
    vy = sum((y - my) ** 2 for _, y in pairs) / n
    if vx == 0 or vy == 0:
        return None
    return cov / math.sqrt(vx * vy)


def degree_pairs(nodes, edges) -> list[tuple[int, int]]:
    """(indegree, outdegree) per node over distinct directed pairs."""
    distinct = set(edges)
    indeg = defaultdict(int)
    outdeg = defaultdict(int)
    for s, t in distinct:
        outdeg[s] += 1
        indeg[t] += 1
    return [(indeg[v], outdeg[v]) for v in nodes]


def brute_spam_check(traces, account, x=Decimal("0.001"), y=30, z=500) -> dict[str, bool]:
    """Evaluate the four spam rules for `account` by scanning every trace.

    `traces` is one month's traces (any kinds). Amount rules use transfers
    only; a reply is any transfer or invocation from a recipient back to
    `account`.
    """
    sent = defaultdict(list)
    repliers = set()
    for t in traces:
        kind = t.kind.value
        if kind == "MoneyTransfer" and t.source.identifier == account:
            sent[t.target.identifier].append(t)
        if kind in ("MoneyTransfer", "ContractInvocation") and t.target.identifier == account:
            repliers.add(t.source.identifier)
    if not sent:
        return {"R1": False, "R2": False, "R3": False, "R4": False}
    total = sum((t.weight for ts in sent.values() for t in ts), Decimal(0))
    silent = [r for r in sent if r not in repliers]
    by_memo = defaultdict(set)
    for r in silent:
        for t in sent[r]:
            if t.memo:
                by_memo[t.memo].add(r)
    return {
        "R1": total / len(sent) <= Decimal(str(x)),
        "R2": all(len(ts) <= y for ts in sent.values()),
        "R3": len(silent) > z,
        "R4": any(len(rs) >= z for rs in by_memo.values()),
    }
