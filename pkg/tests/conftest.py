from decimal import Decimal

import pytest

from txgraph.graph import GraphKind, MonthlyGraph, build_graph
from txgraph.model import Chain, MonthKey, NodeId, Trace, TraceKind

MONTH = MonthKey(2020, 1)
TS = MONTH.start_timestamp() + 3600


def node(name, chain=Chain.EOSIO):
    return NodeId(chain, name)


def mt(src, dst, amount="1", chain=Chain.EOSIO, ts=TS, tx=None, ordinal=0, memo=None, **kw):
    tx = tx or f"{src}-{dst}-{amount}-{ts}-{ordinal}"
    return Trace(chain, TraceKind.MONEY_TRANSFER, node(src, chain), node(dst, chain),
                 Decimal(amount), ts, tx, ordinal, memo, **kw)


def ci(src, dst, chain=Chain.EOSIO, ts=TS, tx=None, ordinal=0):
    tx = tx or f"c-{src}-{dst}-{ts}-{ordinal}"
    return Trace(chain, TraceKind.CONTRACT_INVOCATION, node(src, chain), node(dst, chain),
                 Decimal(1), ts, tx, ordinal)


def ac(src, dst, chain=Chain.EOSIO, ts=TS, tx=None):
    tx = tx or f"a-{src}-{dst}-{ts}"
    return Trace(chain, TraceKind.ACCOUNT_CREATION, node(src, chain), node(dst, chain),
                 Decimal(1), ts, tx, 0)


def graph_from_edges(edges, nodes=(), kind=GraphKind.CIG, chain=Chain.EOSIO, month=MONTH) -> MonthlyGraph:
    traces = [Trace(chain, kind.trace_kind, node(s, chain), node(t, chain), Decimal(1),
                    month.start_timestamp(), f"e{i}", 0) for i, (s, t) in enumerate(edges)]
    g = build_graph(traces, kind, month, chain)
    for n in nodes:
        g.add_node(node(n, chain))
    return g


@pytest.fixture
def month():
    return MONTH
