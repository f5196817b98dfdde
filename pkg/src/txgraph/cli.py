"""
Command-line entry point.

    txgraph ingest   --chain eos raw.jsonl --out work/
    txgraph analyze  --in work/ --out work/ [--registry dapps.csv]
    txgraph report   --in work/ --out work/report/
    txgraph synth    --archetype eidos --seed 7 --out corpus.jsonl
    txgraph spam-scan --in work/ --out work/
    txgraph outliers  --in work/ --out work/

A flat `key = value` config file may be passed with --config; explicit
flags win over it. Errors go to stderr as one line `error[CODE]: message`.
Exit codes: 0 ok, 1 analysis error, 2 input error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from decimal import Decimal, InvalidOperation
from pathlib import Path

from . import synth
from .errors import InputError, TxGraphError
from .ingest import ingest_files, load_dapp_registry, read_traces, write_traces
from .metrics import write_metric_rows
from .model import Chain, MonthKey
from .outlier import DEFAULT_MAX_ITER, DEFAULT_THRESHOLD, load_outlier_labels, write_outlier_report
from .pipeline import (
    AnalysisResult, analyze, bucket, find_outliers, find_spammers, metric_rows, write_timeline,
)
from .report import build_report
from .spam import SpamParams, write_family_tree, write_spam_report

log = logging.getLogger("txgraph")

EXIT_OK, EXIT_ANALYSIS, EXIT_INPUT = 0, 1, 2


def load_config(path: str | Path) -> dict[str, str]:
    """Flat `key = value` lines; `#` starts a comment. Dashes in keys become
    underscores so `z-threshold` and `z_threshold` are the same key."""
    cfg = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise InputError(f"{path}:{lineno}: expected key = value")
            key, value = (part.strip() for part in line.split("=", 1))
            cfg[key.replace("-", "_")] = value
    return cfg


# ---------------------------------------------------------------- argument types

def _month(text: str) -> MonthKey:
    try:
        return MonthKey.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _chain(text: str) -> Chain:
    try:
        return Chain.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _decimal(text: str) -> Decimal:
    try:
        return Decimal(text)
    except InvalidOperation:
        raise argparse.ArgumentTypeError(f"not a decimal: {text!r}") from None


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    return str(text).strip().lower() in ("1", "true", "yes", "on")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise InputError(message)


def _common(p: argparse.ArgumentParser, analysis: bool = True) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--chain", type=_chain, help="btc, eth or eos")
    p.add_argument("--out", default=".", help="output directory (file for synth)")
    grp = p.add_mutually_exclusive_group()
    grp.add_argument("--strict", dest="lenient", action="store_false", help="abort on malformed input (default)")
    grp.add_argument("--lenient", dest="lenient", action="store_true", help="skip malformed lines")
    p.set_defaults(lenient=False)
    if analysis:
        p.add_argument("--in", dest="input", default=None,
                       help="directory holding traces.jsonl, or the file itself")
        p.add_argument("--from", dest="first", type=_month, help="first month, yyyy-MM")
        p.add_argument("--to", dest="last", type=_month, help="last month, yyyy-MM")
        p.add_argument("--registry", help="DApp registry CSV (name,category,chain,identifier)")
        p.add_argument("--labels", help="outlier labels CSV (chain,identifier,category,subcategory)")
        p.add_argument("--z-threshold", type=float, default=DEFAULT_THRESHOLD)
        p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER)
        p.add_argument("--spam-x", type=_decimal, default=SpamParams.x)
        p.add_argument("--spam-y", type=int, default=SpamParams.y)
        p.add_argument("--spam-z", type=int, default=SpamParams.z)
        p.add_argument("--no-memo-rule", dest="require_memo", action="store_false")
        p.set_defaults(require_memo=True)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="txgraph", description="Monthly blockchain transaction-graph analytics.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("ingest", help="parse raw chain records into traces.jsonl")
    _common(p, analysis=False)
    p.add_argument("inputs", nargs="*", help="raw *.jsonl files")
    p.add_argument("--contracts", help="file of known Ethereum contract addresses, one per line")

    for name, help_ in (("analyze", "metrics CSV, outlier JSON and spam JSON"),
                        ("outliers", "outlier detection and attribution only"),
                        ("spam-scan", "spam detection only")):
        p = sub.add_parser(name, help=help_)
        _common(p)

    p = sub.add_parser("report", help="plot-ready CSVs from an analysis")
    _common(p, analysis=False)
    p.add_argument("--in", dest="input", default=".", help="analysis output directory")

    p = sub.add_parser("synth", help="write a synthetic raw corpus")
    _common(p, analysis=False)
    p.add_argument("--archetype", required=True,
                   choices=["eidos", "spam", "spike", "power-law", "utxo", "eos-transfers", "benign"])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--count", type=int, default=None, help="users / txs / nodes / accounts")
    p.add_argument("--rounds", type=int, default=100)
    p.add_argument("--recipients", type=int, default=600)
    p.add_argument("--spammers", type=int, default=5)
    p.add_argument("--amount", default="0.0001")
    p.add_argument("--memo", default="WIN BIG http://example.invalid")
    p.add_argument("--alpha", type=float, default=-2.0)
    p.add_argument("--hubs", type=int, default=1)
    p.add_argument("--month", type=_month, default=synth.DEFAULT_MONTH)
    return parser


def parse_args(argv: list[str] | None = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "config", None):
        cfg = load_config(args.config)
        # Re-parse with config values as defaults so explicit flags still win.
        subparser = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest: a for a in subparser._actions}
        defaults = {}
        for key, value in cfg.items():
            dest = {"from": "first", "to": "last", "in": "input"}.get(key, key)
            if dest not in known:
                raise InputError(f"{args.config}: unknown config key {key!r}")
            action = known[dest]
            if isinstance(action, (argparse._StoreTrueAction, argparse._StoreFalseAction)):
                defaults[dest] = _bool(value)
            elif action.type is not None:
                try:
                    defaults[dest] = action.type(value)
                except (argparse.ArgumentTypeError, ValueError) as exc:
                    raise InputError(f"{args.config}: {key}: {exc}") from None
            else:
                defaults[dest] = value
        subparser.set_defaults(**defaults)
        args = parser.parse_args(argv)
    return args


# ---------------------------------------------------------------- commands

def _trace_path(args) -> Path:
    p = Path(args.input or ".")
    if p.is_dir():
        p = p / "traces.jsonl"
    if not p.exists():
        raise InputError(f"trace file not found: {p}")
    return p


def _out_dir(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _spam_params(args) -> SpamParams:
    try:
        return SpamParams(args.spam_x, args.spam_y, args.spam_z, args.require_memo)
    except ValueError as exc:
        raise InputError(str(exc)) from None


def _check_range(args) -> None:
    if args.first and args.last and args.first > args.last:
        raise InputError(f"--from {args.first} is after --to {args.last}")
    if args.z_threshold <= 0:
        raise InputError("--z-threshold must be positive")


def cmd_ingest(args) -> int:
    if args.chain is None:
        raise InputError("--chain is required for ingest")
    for p in args.inputs:
        if not Path(p).exists():
            raise InputError(f"input not found: {p}")
    seeds = []
    if args.contracts:
        seeds = [l.strip() for l in Path(args.contracts).read_text().splitlines() if l.strip()]
    traces, summary = ingest_files(args.inputs, args.chain, args.lenient, seed_contracts=seeds)
    out = _out_dir(args)
    write_traces(traces, out / "traces.jsonl")
    with open(out / "ingest_summary.json", "w", encoding="utf-8", newline="\n") as fh:
        json.dump(summary.as_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    print(json.dumps(summary.as_dict(), sort_keys=True))
    return EXIT_OK


def _load_inputs(args):
    _check_range(args)
    traces = read_traces(_trace_path(args), args.lenient)
    registry = load_dapp_registry(args.registry) if args.registry else None
    labels = load_outlier_labels(args.labels) if args.labels else None
    chains = [args.chain] if args.chain else None
    return traces, registry, labels, chains


def cmd_analyze(args) -> int:
    traces, registry, labels, chains = _load_inputs(args)
    result = analyze(traces, chains, args.first, args.last, registry, args.z_threshold,
                     args.max_iter, _spam_params(args), labels)
    out = _out_dir(args)
    write_metric_rows(result.rows, out / "metrics.csv")
    write_outlier_report(result.outliers, out / "outliers.json")
    write_spam_report(result.verdicts, out / "spam.json")
    write_timeline(result.timeline(), out / "spam_timeline.csv")
    for chain, tree in sorted(result.trees.items()):
        write_family_tree(tree, out / f"family_tree_{chain.value}.csv")
    print(f"metrics={len(result.rows)} outliers={len(result.outliers)} spam={len(result.verdicts)}")
    return EXIT_OK


def cmd_outliers(args) -> int:
    traces, registry, labels, chains = _load_inputs(args)
    records = []
    for chain in chains or sorted({t.chain for t in traces}):
        cm = bucket(traces, chain, args.first, args.last)
        _, series = metric_rows(cm)
        records.extend(find_outliers(cm, series, args.z_threshold, args.max_iter, labels))
    write_outlier_report(records, _out_dir(args) / "outliers.json")
    print(f"outliers={len(records)}")
    return EXIT_OK


def cmd_spam_scan(args) -> int:
    traces, _, _, chains = _load_inputs(args)
    params = _spam_params(args)
    verdicts = []
    for chain in chains or sorted({t.chain for t in traces}):
        verdicts.extend(find_spammers(bucket(traces, chain, args.first, args.last), params))
    out = _out_dir(args)
    write_spam_report(verdicts, out / "spam.json")
    write_timeline(AnalysisResult(verdicts=verdicts).timeline(), out / "spam_timeline.csv")
    print(f"spam={len(verdicts)}")
    return EXIT_OK


def cmd_report(args) -> int:
    metrics = Path(args.input) / "metrics.csv"
    if not metrics.exists():
        raise InputError(f"metrics file not found: {metrics}")
    paths = build_report(metrics, _out_dir(args))
    print(" ".join(str(p) for p in paths.values()))
    return EXIT_OK


def cmd_synth(args) -> int:
    a, seed, month = args.archetype, args.seed, args.month
    if a == "eidos":
        records = synth.gen_eidos_loop(args.count or 10, args.rounds, seed, Decimal(args.amount), month, raw=True)
    elif a == "spam":
        records = synth.traces_to_raw(synth.gen_spam_campaign(
            args.spammers, args.recipients, args.amount, args.memo, seed, month))
    elif a == "spike":
        records = synth.traces_to_raw(synth.gen_spike_corpus(seed, hubs=args.hubs).traces)
    elif a == "power-law":
        records = synth.traces_to_raw(synth.gen_power_law_graph(args.count or 10_000, args.alpha, seed,
                                                                month=month))
    elif a == "utxo":
        records = synth.gen_utxo_txs(args.count or 100, seed, month)
    elif a == "eos-transfers":
        records = synth.gen_eosio_transfer_actions(args.count or 100, seed, month)
    else:
        records = synth.traces_to_raw(synth.gen_benign_traffic(args.count or 1000, 5 * (args.count or 1000),
                                                               seed, month))
    out = Path(args.out)
    if out.is_dir():
        out = out / f"{a}.jsonl"
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    print(f"{out}: {len(records)} records")
    return EXIT_OK


COMMANDS = {
    "ingest": cmd_ingest,
    "analyze": cmd_analyze,
    "outliers": cmd_outliers,
    "spam-scan": cmd_spam_scan,
    "report": cmd_report,
    "synth": cmd_synth,
}


def main(argv: list[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except (InputError, FileNotFoundError, UnicodeDecodeError) as exc:
        code = getattr(exc, "code", "INPUT")
        print(f"error[{code}]: {_one_line(exc)}", file=sys.stderr)
        return EXIT_INPUT
    except (TxGraphError, ValueError) as exc:
        code = getattr(exc, "code", "ANALYSIS")
        print(f"error[{code}]: {_one_line(exc)}", file=sys.stderr)
        return EXIT_ANALYSIS


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split())


if __name__ == "__main__":
    sys.exit(main())
