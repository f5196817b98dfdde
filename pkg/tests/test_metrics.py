import math
import random

import pytest
from hypothesis import given, settings, strategies as st

from txgraph.errors import ContractViolation, InsufficientPoints, NotApplicable
from txgraph.graph import GraphKind, build_graph
from txgraph.metrics import (
    DegreeHistogram, assemble_series, count_scc, count_wcc, degree_histogram, fit_alpha, pearson_r,
    trace_stats,
)
from txgraph.model import Chain, InitiatorRole, MonthKey, TraceKind
from txgraph.oracles import brute_pearson, brute_scc, brute_wcc, degree_pairs
from txgraph import synth

from conftest import MONTH, ac, ci, graph_from_edges, mt, node


# ---------------------------------------------------------------- oracles on hand cases

def test_oracle_hand_cases():
    assert brute_scc("abc", [("a", "b"), ("b", "a")]) == 2
    assert brute_wcc("abc", [("a", "b")]) == 2
    # cov = 1/3, var_x = var_y = 2/3, so r = 0.5.
    assert brute_pearson([(1, 2), (2, 1), (3, 3)]) == pytest.approx(0.5, abs=1e-15)


# ---------------------------------------------------------------- trace stats

def test_trace_stats_ratios():
    traces = [mt("a", f"b{i}", ordinal=i) for i in range(3)] + [ac("a", "n")] + \
             [ci("a", "c", ordinal=i) for i in range(6)]
    s = trace_stats(traces)
    assert s.ratios == pytest.approx({TraceKind.MONEY_TRANSFER: 0.3, TraceKind.ACCOUNT_CREATION: 0.1,
                                      TraceKind.CONTRACT_INVOCATION: 0.6})
    assert sum(s.ratios.values()) == pytest.approx(1.0)


def test_trace_stats_roles():
    s = trace_stats([mt("a", "b", initiator_role=InitiatorRole.USER, ordinal=i) for i in range(4)])
    assert s.role_split[TraceKind.MONEY_TRANSFER][InitiatorRole.USER] == 1.0
    assert sum(s.role_split[TraceKind.MONEY_TRANSFER].values()) == 1.0


def test_trace_stats_eidos_two_thirds():
    s = trace_stats(synth.gen_eidos_loop(10, 100, seed=1))
    assert s.counts[TraceKind.MONEY_TRANSFER] == 2000
    assert s.counts[TraceKind.CONTRACT_INVOCATION] == 1000
    assert s.ratios[TraceKind.MONEY_TRANSFER] == 2 / 3


# ---------------------------------------------------------------- degree histogram / alpha

def test_histogram_out_in():
    g = graph_from_edges([("a", "b"), ("a", "c")])
    out = degree_histogram(g, "out")
    assert out.points == [(2, 1 / 3)] and out.node_count == 3
    assert degree_histogram(g, "in").points == [(1, 2 / 3)]


def test_histogram_star():
    g = graph_from_edges([("1", str(i)) for i in range(2, 12)])
    assert degree_histogram(g, "out").points == [(10, 1 / 11)]


def test_histogram_counts_distinct_edges():
    g = build_graph([mt("a", "b"), mt("a", "b", ordinal=1)], GraphKind.MTG, MONTH)
    assert degree_histogram(g, "total").points == [(1, 1.0)]


@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), max_size=60), st.integers(0, 5))
def test_degree_sums_and_proportions(edges, isolated):
    g = graph_from_edges([(str(a), str(b)) for a, b in edges], nodes=[f"iso{i}" for i in range(isolated)])
    n_edges = len(g.edges)
    assert sum(g.in_degree(v) for v in g.nodes) == n_edges == sum(g.out_degree(v) for v in g.nodes)
    for mode, fn in (("in", g.in_degree), ("out", g.out_degree), ("total", g.degree)):
        h = degree_histogram(g, mode)
        nonzero = sum(1 for v in g.nodes if fn(v) > 0)
        if g.nodes:
            assert math.fsum(p for _, p in h.points) == pytest.approx(nonzero / len(g.nodes))
        assert [d for d, _ in h.points] == sorted({d for d, _ in h.points})


def test_fit_alpha_exact():
    f = fit_alpha(DegreeHistogram("out", [(1, .5), (2, .125), (4, .03125)], 10))
    assert f.alpha == pytest.approx(-2, abs=1e-12)
    assert f.point_count == 3
    assert fit_alpha(DegreeHistogram("out", [(1, .8), (10, .008)], 10)).alpha == pytest.approx(-2, abs=1e-12)


def test_fit_alpha_needs_two_points():
    with pytest.raises(InsufficientPoints):
        fit_alpha(DegreeHistogram("out", [(3, 1.0)], 1))


@given(st.floats(-4, -0.2), st.floats(1e-3, 1.0), st.integers(2, 30), st.floats(0.01, 50))
def test_fit_alpha_power_law_and_scale_invariance(k, c, m, scale):
    pts = [(d, c * d ** k) for d in range(1, m + 1)]
    f = fit_alpha(DegreeHistogram("out", pts, 1))
    assert f.alpha == pytest.approx(k, abs=1e-9)
    g = fit_alpha(DegreeHistogram("out", [(d, p * scale) for d, p in pts], 1))
    assert g.alpha == pytest.approx(f.alpha, abs=1e-9)
    assert g.intercept == pytest.approx(f.intercept + math.log10(scale), abs=1e-9)


# ---------------------------------------------------------------- pearson

def test_pearson_perfect():
    g = graph_from_edges([("a", "b"), ("b", "c"), ("c", "a"), ("a", "c"), ("c", "b"), ("b", "a"),
                          ("d", "e"), ("e", "d")])
    assert pearson_r(g).r == pytest.approx(1.0)


def test_pearson_hand_case():
    # Degree pairs (in, out) = (1,2), (2,1), (3,3).
    g = graph_from_edges([("a", "b"), ("a", "c"), ("b", "c"), ("c", "a"), ("c", "b"), ("c", "c")])
    pairs = sorted((g.in_degree(v), g.out_degree(v)) for v in g.nodes)
    assert pairs == [(1, 2), (2, 1), (3, 3)]
    assert abs(pearson_r(g).r - 0.5) <= 1e-12


def test_pearson_undefined():
    assert pearson_r(graph_from_edges([("a", "b"), ("b", "a")])) is None
    assert pearson_r(graph_from_edges([], nodes=["a"])) is None


def test_pearson_matches_oracle_random():
    for seed in range(30):
        g = synth.gen_random_graph(60, 150, seed)
        pairs = [(g.in_degree(v), g.out_degree(v)) for v in g.nodes]
        ref = brute_pearson(pairs)
        res = pearson_r(g)
        assert (res is None) == (ref is None)
        if ref is not None:
            assert abs(res.r - ref) <= 1e-9


def test_pearson_invariant_under_mean_node():
    rng = random.Random(2)
    for _ in range(20):
        pairs = [(rng.randint(0, 6), rng.randint(0, 6)) for _ in range(11)]
        base = brute_pearson(pairs)
        if base is None:
            continue
        mx = sum(x for x, _ in pairs) / len(pairs)
        my = sum(y for _, y in pairs) / len(pairs)
        assert brute_pearson(pairs + [(mx, my)]) == pytest.approx(base, abs=1e-12)


def test_pearson_relabel_invariant():
    g = synth.gen_random_graph(40, 90, seed=9)
    rename = {v.identifier: f"z{i:03d}" for i, v in enumerate(sorted(g.nodes, reverse=True))}
    h = graph_from_edges([(rename[s.identifier], rename[t.identifier]) for s, t in g.edges],
                         nodes=rename.values())
    assert pearson_r(h).r == pytest.approx(pearson_r(g).r, abs=1e-12)


# ---------------------------------------------------------------- components

def test_wcc_cases():
    assert count_wcc(graph_from_edges([("a", "b")], nodes=["c"])) == 2
    assert count_wcc(graph_from_edges([])) == 0


def test_scc_cases():
    assert count_scc(graph_from_edges([("a", "b"), ("b", "a")], nodes=["c"])) == 2
    assert count_scc(graph_from_edges([("a", "b"), ("b", "c")])) == 3


def test_scc_bitcoin_mtg_not_applicable():
    g = graph_from_edges([("a", "b")], kind=GraphKind.MTG, chain=Chain.BITCOIN)
    with pytest.raises(NotApplicable):
        count_scc(g)


def test_scc_deep_chain_no_recursion_limit():
    n = 5000
    g = graph_from_edges([(f"v{i}", f"v{i + 1}") for i in range(n)] + [(f"v{n}", "v0")])
    assert count_scc(g) == 1


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 60), st.integers(0, 200), st.integers(0, 2**32))
def test_components_match_oracles(n, m, seed):
    g = synth.gen_random_graph(n, m, seed)
    nodes, edges = list(g.nodes), list(g.edges)
    assert count_wcc(g) == brute_wcc(nodes, edges)
    assert count_scc(g) == brute_scc(nodes, edges)
    assert count_scc(g) >= count_wcc(g)


# ---------------------------------------------------------------- series

def months(*names):
    return [MonthKey.parse(n) for n in names]


def test_series_full():
    s = assemble_series(zip(months("2019-01", "2019-02", "2019-03"), [1, 2, 3]))
    assert len(s) == 3 and s.values == [1, 2, 3]


def test_series_gap():
    s = assemble_series(zip(months("2019-01", "2019-03"), [1, 3]))
    assert s.values == [1, None, 3]


def test_series_unordered():
    s = assemble_series(zip(months("2019-03", "2019-01", "2019-02"), [3, 1, 2]))
    assert [str(m) for m in s.months] == ["2019-01", "2019-02", "2019-03"]
    assert s.values == [1, 2, 3]


def test_series_duplicate():
    with pytest.raises(ContractViolation):
        assemble_series(zip(months("2019-01", "2019-01"), [1, 2]))
