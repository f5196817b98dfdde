import csv
import json

import pytest

from txgraph.cli import main
from txgraph import synth

TS = 1583020800


def write_jsonl(path, records):
    path.write_text("".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    return path


def run(*argv):
    return main([str(a) for a in argv])


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def metric(rows, kind, name, month=None):
    return [r for r in rows if r["graph_kind"] == kind and r["metric"] == name
            and (month is None or r["month"] == month)]


def test_ingest_bitcoin(tmp_path, capsys):
    tx = {"timestamp": TS, "inputs": [{"pubkey": "k1", "amount": "5"}, {"pubkey": "k2", "amount": "3"}],
          "outputs": [{"pubkey": "k3", "amount": "7"}, {"pubkey": "k4", "amount": "1"}]}
    raw = write_jsonl(tmp_path / "btc.jsonl", [dict(tx, tx_id=f"t{i}") for i in range(3)])
    assert run("ingest", "--chain", "btc", raw, "--out", tmp_path / "o") == 0
    lines = (tmp_path / "o" / "traces.jsonl").read_text().splitlines()
    assert len(lines) == 12
    summary = json.loads((tmp_path / "o" / "ingest_summary.json").read_text())
    assert summary["records_read"] == 3 and summary["per_kind"]["MoneyTransfer"] == 12


def test_ingest_empty(tmp_path):
    raw = tmp_path / "empty.jsonl"
    raw.write_text("")
    assert run("ingest", "--chain", "eth", raw, "--out", tmp_path / "o") == 0
    assert (tmp_path / "o" / "traces.jsonl").read_text() == ""
    summary = json.loads((tmp_path / "o" / "ingest_summary.json").read_text())
    assert summary["records_read"] == 0 and summary["traces"] == 0


def test_ingest_bad_json_strict(tmp_path, capsys):
    raw = tmp_path / "bad.jsonl"
    raw.write_text('{"tx_id": "a", "timestamp": 1, "inputs": [], "outputs": []}\n{oops\n')
    assert run("ingest", "--chain", "btc", raw, "--out", tmp_path / "o") == 2
    err = capsys.readouterr().err.strip().splitlines()
    assert len(err) == 1 and err[0].startswith("error[PARSE]:") and "line 2" in err[0]
    assert run("ingest", "--lenient", "--chain", "btc", raw, "--out", tmp_path / "o") == 0


def test_error_paths_exit_codes(tmp_path, capsys):
    assert run("analyze", "--in", tmp_path / "missing") == 2
    assert run("bogus") == 2
    assert run("analyze", "--in", tmp_path, "--from", "2020-05", "--to", "2020-01") == 2
    for line in capsys.readouterr().err.strip().splitlines():
        assert line.startswith("error[")


def _pipeline(tmp_path, chain, records, *extra):
    raw = write_jsonl(tmp_path / f"{chain}.jsonl", records)
    work = tmp_path / f"work_{chain}"
    assert run("ingest", "--chain", chain, raw, "--out", work) == 0
    assert run("analyze", "--in", work, "--out", work, *extra) == 0
    return work


def test_analyze_eidos_ratio(tmp_path):
    work = _pipeline(tmp_path, "eos", synth.gen_eidos_loop(10, 100, seed=1, raw=True))
    rows = read_csv(work / "metrics.csv")
    [row] = metric(rows, "MTG", "trace_ratio")
    assert round(float(row["value"]), 3) == 0.667
    assert float(row["value"]) == 2 / 3


def test_analyze_spike_names_planted_node(tmp_path):
    corpus = synth.gen_spike_corpus(seed=1)
    work = _pipeline(tmp_path, "eos", synth.traces_to_raw(corpus.traces), "--z-threshold", "2.0")
    records = json.loads((work / "outliers.json").read_text())
    hits = [r for r in records if r["metric"] == "trace_count"]
    assert len(hits) == 1
    assert hits[0]["resolved"] and hits[0]["responsible_nodes"] == [corpus.planted[0].identifier]
    assert hits[0]["month"] == str(corpus.spike_month)


def test_analyze_bitcoin_has_no_scc(tmp_path):
    records = synth.gen_utxo_txs(100, seed=1) + synth.gen_utxo_txs(100, seed=2, month=synth.DEFAULT_MONTH.shift(1))
    work = _pipeline(tmp_path, "btc", records)
    rows = read_csv(work / "metrics.csv")
    assert not [r for r in rows if r["metric"] == "scc"]
    assert len(metric(rows, "MTG", "wcc")) == 2
    assert {r["graph_kind"] for r in rows} == {"MTG"}


def test_analyze_gap_month_is_absent(tmp_path):
    records = synth.gen_utxo_txs(20, seed=1) + synth.gen_utxo_txs(20, seed=2, month=synth.DEFAULT_MONTH.shift(2))
    work = _pipeline(tmp_path, "btc", records)
    rows = metric(read_csv(work / "metrics.csv"), "MTG", "trace_count")
    assert [r["value"] == "" for r in rows] == [False, True, False]


def test_analyze_spam_and_family_tree(tmp_path):
    traces = synth.gen_spam_campaign(2, 600, "0.0001", "ad", seed=1) + \
             synth.gen_benign_traffic(300, 1500, seed=1)
    from txgraph.model import Chain, NodeId, Trace, TraceKind
    from decimal import Decimal
    ts = synth.DEFAULT_MONTH.start_timestamp()
    traces += [Trace(Chain.EOSIO, TraceKind.ACCOUNT_CREATION, NodeId(Chain.EOSIO, "factory"),
                     NodeId(Chain.EOSIO, f"spamer00{i}"), Decimal(1), ts, f"mk{i}") for i in range(2)]
    work = _pipeline(tmp_path, "eos", synth.traces_to_raw(traces))
    verdicts = json.loads((work / "spam.json").read_text())
    assert [v["account"] for v in verdicts] == ["spamer000", "spamer001"]
    assert (work / "family_tree_eos.csv").read_text() == \
        "parent,child,flagged\nfactory,spamer000,1\nfactory,spamer001,1\n"
    assert read_csv(work / "spam_timeline.csv") == [{"chain": "eos", "month": "2020-01", "first_seen_accounts": "2"}]


def test_spam_scan_and_outliers_commands(tmp_path):
    work = _pipeline(tmp_path, "eos", synth.traces_to_raw(synth.gen_spam_campaign(1, 600, "0.0001", "ad", seed=3)))
    out = tmp_path / "only"
    assert run("spam-scan", "--in", work, "--out", out, "--spam-z", "700") == 0
    assert json.loads((out / "spam.json").read_text()) == []
    assert run("spam-scan", "--in", work, "--out", out) == 0
    assert len(json.loads((out / "spam.json").read_text())) == 1
    assert run("outliers", "--in", work, "--out", out) == 0
    assert json.loads((out / "outliers.json").read_text()) == []


def test_config_file_and_flag_override(tmp_path):
    work = _pipeline(tmp_path, "eos", synth.traces_to_raw(synth.gen_spam_campaign(1, 600, "0.0001", "ad", seed=3)))
    cfg = tmp_path / "run.cfg"
    cfg.write_text(f"# spam settings\nin = {work}\nout = {tmp_path / 'c'}\nspam-z = 700\n")
    assert run("spam-scan", "--config", cfg) == 0
    assert json.loads((tmp_path / "c" / "spam.json").read_text()) == []
    assert run("spam-scan", "--config", cfg, "--spam-z", "500") == 0
    assert len(json.loads((tmp_path / "c" / "spam.json").read_text())) == 1
    bad = tmp_path / "bad.cfg"
    bad.write_text("nonsense = 1\n")
    assert run("spam-scan", "--config", bad) == 2


def test_report_two_chains_role_series(tmp_path):
    eos = synth.traces_to_raw(synth.gen_eidos_loop(3, 5, seed=1))
    eth = synth.traces_to_raw(synth.gen_power_law_graph(200, -2.0, seed=1))
    work = tmp_path / "w"
    write_jsonl(tmp_path / "eos.jsonl", eos)
    write_jsonl(tmp_path / "eth.jsonl", eth)
    assert run("ingest", "--chain", "eos", tmp_path / "eos.jsonl", "--out", tmp_path / "a") == 0
    assert run("ingest", "--chain", "eth", tmp_path / "eth.jsonl", "--out", tmp_path / "b") == 0
    merged = (tmp_path / "a" / "traces.jsonl").read_text() + (tmp_path / "b" / "traces.jsonl").read_text()
    work.mkdir()
    (work / "traces.jsonl").write_text(merged)
    assert run("analyze", "--in", work, "--out", work) == 0
    assert run("report", "--in", work, "--out", work / "rep") == 0
    series = {r["series"] for r in read_csv(work / "rep" / "roles.csv")}
    for chain in ("eos", "eth"):
        for kind in ("MTG", "ACG", "CIG"):
            for role in ("user", "contract", "unknown"):
                assert f"{chain}/{kind}/{role}" in series


def test_report_empty_analysis(tmp_path):
    (tmp_path / "metrics.csv").write_text("chain,graph_kind,metric,month,value\n")
    assert run("report", "--in", tmp_path, "--out", tmp_path / "rep") == 0
    for f in (tmp_path / "rep").iterdir():
        assert f.read_text() == "series,month,value\n"


def test_report_dapp_share_footer(tmp_path):
    reg = tmp_path / "reg.csv"
    reg.write_text("name,category,chain,identifier\nEIDOS,EIDOS,eos,eidosonecoin\nDice,Gambling,eos,eidosuser0000\n")
    work = _pipeline(tmp_path, "eos", synth.gen_eidos_loop(4, 5, seed=1, raw=True), "--registry", reg)
    assert run("report", "--in", work, "--out", work / "rep") == 0
    rows = read_csv(work / "rep" / "dapp_shares.csv")
    shares = {r["series"]: float(r["value"]) for r in rows if r["month"] == "2020-01"}
    assert shares["eos/EIDOS"] == 1.0 and shares["eos/non_dapp"] == 0.0
    # eidosuser0000 touches 10 of 60 traces, all of them also EIDOS traces.
    assert shares["eos/Gambling"] == pytest.approx(10 / 60)
    footer = {r["series"]: r["value"] for r in rows if r["month"] == "all"}
    assert float(footer["check/min_share_sum"]) >= 1 - 1e-9 and footer["check/accounting_ok"] == "1"


def test_synth_command(tmp_path):
    out = tmp_path / "s.jsonl"
    assert run("synth", "--archetype", "utxo", "--count", "5", "--seed", "3", "--out", out) == 0
    first = out.read_text()
    assert len(first.splitlines()) == 5
    assert run("synth", "--archetype", "utxo", "--count", "5", "--seed", "3", "--out", out) == 0
    assert out.read_text() == first
