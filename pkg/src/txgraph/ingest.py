"""
Chain adapters: raw JSONL records -> normalized Trace streams.

Raw schemas (one JSON object per line, decimals as strings):

    btc  {tx_id, timestamp, inputs: [{pubkey, amount}], outputs: [{pubkey, amount}]}
    eth  {tx_id, ordinal, timestamp, from, to, value, input_data,
          trace_type: external|internal-call|internal-create, to_is_contract}
    eos  {tx_id, ordinal, timestamp, contract, action_name, receiver, payer,
          payee, quantity, memo, initiator, initiator_is_contract}
"""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
from collections import Counter
from dataclasses import dataclass, field
from decimal import Decimal, InvalidOperation
from pathlib import Path
from typing import Any, Iterable, Iterator

from .errors import ParseError, RegistryError
from .model import (
    CATEGORIES, Chain, DAppLabel, InitiatorRole, NodeClass, NodeId, Trace, TraceKind,
)

log = logging.getLogger(__name__)

TOKEN_CONTRACT = "eosio.token"
SYSTEM_ACCOUNT = "eosio"
ETH_TRACE_TYPES = ("external", "internal-call", "internal-create")


def parse_decimal(value: Any, what: str = "amount") -> Decimal:
    """Exact decimal from a JSON string/int. A trailing token symbol
    ("1.0000 EOS") is tolerated."""
    if isinstance(value, bool) or value is None:
        raise ParseError(f"{what}: expected decimal, got {value!r}")
    if isinstance(value, float):
        value = repr(value)
    text = str(value).strip().split(" ")[0]
    try:
        d = Decimal(text)
    except InvalidOperation:
        raise ParseError(f"{what}: not a decimal: {value!r}") from None
    if not d.is_finite():
        raise ParseError(f"{what}: not finite: {value!r}")
    return d


def _req(obj: dict, key: str) -> Any:
    if key not in obj or obj[key] is None:
        raise ParseError(f"missing field {key!r}")
    return obj[key]


def _int(obj: dict, key: str, default: int | None = None) -> int:
    v = obj.get(key, default)
    if v is None or isinstance(v, bool):
        raise ParseError(f"missing or invalid integer field {key!r}")
    try:
        return int(v)
    except (TypeError, ValueError):
        raise ParseError(f"field {key!r}: not an integer: {v!r}") from None


# ---------------------------------------------------------------- raw types

@dataclass(frozen=True)
class RawBitcoinTx:
    tx_id: str
    timestamp: int
    inputs: tuple[tuple[str, Decimal], ...]
    outputs: tuple[tuple[str, Decimal], ...]

    @classmethod
    def from_json(cls, obj: dict) -> "RawBitcoinTx":
        def legs(key):
            out = []
            for leg in obj.get(key) or []:
                if isinstance(leg, dict):
                    out.append((str(_req(leg, "pubkey")), parse_decimal(_req(leg, "amount"))))
                elif isinstance(leg, (list, tuple)) and len(leg) == 2:
                    out.append((str(leg[0]), parse_decimal(leg[1])))
                else:
                    raise ParseError(f"{key}: malformed leg {leg!r}")
            return tuple(out)

        return cls(str(_req(obj, "tx_id")), _int(obj, "timestamp"), legs("inputs"), legs("outputs"))


@dataclass(frozen=True)
class RawEthereumTrace:
    tx_id: str
    ordinal: int
    timestamp: int
    from_: str
    to: str | None
    value: Decimal
    input_data: int
    trace_type: str
    to_is_contract: bool | None = None

    @classmethod
    def from_json(cls, obj: dict) -> "RawEthereumTrace":
        trace_type = str(obj.get("trace_type", "external"))
        if trace_type not in ETH_TRACE_TYPES:
            raise ParseError(f"unknown trace_type {trace_type!r}")
        to = obj.get("to")
        to_is_contract = obj.get("to_is_contract")
        if to_is_contract is not None and not isinstance(to_is_contract, bool):
            raise ParseError("to_is_contract must be a boolean")
        return cls(
            tx_id=str(_req(obj, "tx_id")),
            ordinal=_int(obj, "ordinal", 0),
            timestamp=_int(obj, "timestamp"),
            from_=str(_req(obj, "from")),
            to=str(to) if to not in (None, "") else None,
            value=parse_decimal(obj.get("value", "0"), "value"),
            input_data=_int(obj, "input_data", 0),
            trace_type=trace_type,
            to_is_contract=to_is_contract,
        )


@dataclass(frozen=True)
class RawEosioAction:
    tx_id: str
    ordinal: int
    timestamp: int
    contract: str
    action_name: str
    receiver: str
    initiator: str
    payer: str | None = None
    payee: str | None = None
    quantity: Decimal | None = None
    memo: str | None = None
    initiator_is_contract: bool | None = None

    @classmethod
    def from_json(cls, obj: dict) -> "RawEosioAction":
        action_name = str(_req(obj, "action_name"))
        if not action_name:
            raise ParseError("empty action_name")
        contract = str(_req(obj, "contract"))
        qty = obj.get("quantity")
        flag = obj.get("initiator_is_contract")
        if flag is not None and not isinstance(flag, bool):
            raise ParseError("initiator_is_contract must be a boolean")
        return cls(
            tx_id=str(_req(obj, "tx_id")),
            ordinal=_int(obj, "ordinal", 0),
            timestamp=_int(obj, "timestamp"),
            contract=contract,
            action_name=action_name,
            receiver=str(obj.get("receiver") or contract),
            initiator=str(_req(obj, "initiator")),
            payer=obj.get("payer"),
            payee=obj.get("payee"),
            quantity=None if qty is None else parse_decimal(qty, "quantity"),
            memo=obj.get("memo"),
            initiator_is_contract=flag,
        )


RAW_TYPES = {
    Chain.BITCOIN: RawBitcoinTx,
    Chain.ETHEREUM: RawEthereumTrace,
    Chain.EOSIO: RawEosioAction,
}


# ---------------------------------------------------------------- parsers

def parse_bitcoin_tx(raw: RawBitcoinTx) -> list[Trace]:
    """Route every input and output through one txid-surrogate node."""
    chain = Chain.BITCOIN
    hub = NodeId(chain, raw.tx_id, NodeClass.TXID)
    traces = []
    ordinal = 0
    for pubkey, amount in raw.inputs:
        if amount < 0:
            raise ParseError(f"negative input amount in {raw.tx_id}")
        traces.append(Trace(chain, TraceKind.MONEY_TRANSFER, NodeId(chain, pubkey), hub,
                            amount, raw.timestamp, raw.tx_id, ordinal))
        ordinal += 1
    for pubkey, amount in raw.outputs:
        if amount < 0:
            raise ParseError(f"negative output amount in {raw.tx_id}")
        traces.append(Trace(chain, TraceKind.MONEY_TRANSFER, hub, NodeId(chain, pubkey),
                            amount, raw.timestamp, raw.tx_id, ordinal))
        ordinal += 1
    return traces


def parse_ethereum_trace(raw: RawEthereumTrace, contracts: set[str] | None = None) -> Trace | None:
    """Classify one Ethereum trace.

    `contracts` is the set of addresses known to hold code; it is consulted
    only when the record does not say whether `to` is a contract.
    """
    chain = Chain.ETHEREUM
    if raw.to is None:
        raise ParseError(f"trace {raw.tx_id}#{raw.ordinal} has no 'to' address")
    role = InitiatorRole.USER if raw.trace_type == "external" else InitiatorRole.CONTRACT
    src = NodeId(chain, raw.from_)

    if raw.trace_type == "internal-create":
        return Trace(chain, TraceKind.ACCOUNT_CREATION, src, NodeId(chain, raw.to, NodeClass.CONTRACT),
                     Decimal(1), raw.timestamp, raw.tx_id, raw.ordinal, initiator_role=role)

    if raw.to_is_contract is not None:
        is_contract = raw.to_is_contract
    else:
        is_contract = contracts is not None and raw.to in contracts
    if raw.value > 0 and raw.input_data == 0 and not is_contract:
        return Trace(chain, TraceKind.MONEY_TRANSFER, src, NodeId(chain, raw.to),
                     raw.value, raw.timestamp, raw.tx_id, raw.ordinal, initiator_role=role)
    if is_contract or raw.input_data > 0:
        return Trace(chain, TraceKind.CONTRACT_INVOCATION, src, NodeId(chain, raw.to, NodeClass.CONTRACT),
                     Decimal(1), raw.timestamp, raw.tx_id, raw.ordinal, initiator_role=role)
    return None


class EthereumAdapter:
    """Stateful wrapper around parse_ethereum_trace that remembers every
    created address as a contract. Feed records in timestamp order."""

    def __init__(self, seed_contracts: Iterable[str] = ()):
        self.contracts: set[str] = set(seed_contracts)

    def __call__(self, raw: RawEthereumTrace) -> Trace | None:
        trace = parse_ethereum_trace(raw, self.contracts)
        if trace is not None:
            if trace.kind is TraceKind.ACCOUNT_CREATION:
                self.contracts.add(trace.target.identifier)
            elif raw.to_is_contract:
                self.contracts.add(trace.target.identifier)
        return trace


def parse_eosio_action(raw: RawEosioAction, token_contract: str = TOKEN_CONTRACT,
                       system_account: str = SYSTEM_ACCOUNT) -> Trace | None:
    chain = Chain.EOSIO
    if raw.receiver != raw.contract:
        # Notification receipt of an action already counted at its code owner.
        return None
    if raw.initiator_is_contract is None:
        role = InitiatorRole.UNKNOWN
    else:
        role = InitiatorRole.CONTRACT if raw.initiator_is_contract else InitiatorRole.USER

    if raw.contract == token_contract and raw.action_name == "transfer":
        if not raw.payer or not raw.payee or raw.quantity is None:
            raise ParseError(f"transfer {raw.tx_id}#{raw.ordinal} lacks payer/payee/quantity")
        if raw.quantity < 0:
            raise ParseError(f"negative quantity in {raw.tx_id}#{raw.ordinal}")
        return Trace(chain, TraceKind.MONEY_TRANSFER, NodeId(chain, raw.payer), NodeId(chain, raw.payee),
                     raw.quantity, raw.timestamp, raw.tx_id, raw.ordinal, memo=raw.memo,
                     initiator_role=role)
    if raw.contract == system_account and raw.action_name == "newaccount":
        creator = raw.payer or raw.initiator
        if not raw.payee:
            raise ParseError(f"newaccount {raw.tx_id}#{raw.ordinal} lacks the created account (payee)")
        return Trace(chain, TraceKind.ACCOUNT_CREATION, NodeId(chain, creator), NodeId(chain, raw.payee),
                     Decimal(1), raw.timestamp, raw.tx_id, raw.ordinal, initiator_role=role)
    return Trace(chain, TraceKind.CONTRACT_INVOCATION, NodeId(chain, raw.initiator),
                 NodeId(chain, raw.contract, NodeClass.CONTRACT), Decimal(1), raw.timestamp,
                 raw.tx_id, raw.ordinal, memo=raw.memo, initiator_role=role)


# ---------------------------------------------------------------- registry

@dataclass
class DAppRegistry:
    entries: dict[tuple[Chain, str], DAppLabel] = field(default_factory=dict)

    def lookup(self, chain: Chain, identifier: str) -> DAppLabel | None:
        return self.entries.get((chain, identifier))

    def label_of(self, node: NodeId) -> DAppLabel | None:
        return self.entries.get((node.chain, node.identifier))

    def __len__(self):
        return len(self.entries)


def load_dapp_registry(path: str | Path) -> DAppRegistry:
    reg = DAppRegistry()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None:
            return reg
        missing = {"name", "category", "chain", "identifier"} - set(reader.fieldnames)
        if missing:
            raise RegistryError(f"{path}: missing columns {sorted(missing)}")
        for lineno, row in enumerate(reader, start=2):
            category = (row["category"] or "").strip()
            if category not in CATEGORIES:
                raise RegistryError(f"{path}:{lineno}: unknown category {category!r}")
            try:
                chain = Chain.parse(row["chain"] or "")
            except ValueError as exc:
                raise RegistryError(f"{path}:{lineno}: {exc}") from None
            key = (chain, (row["identifier"] or "").strip())
            if key in reg.entries:
                log.warning("%s:%d: duplicate registry key %s/%s, last row wins",
                            path, lineno, chain.value, key[1])
            reg.entries[key] = DAppLabel(row["name"].strip(), category)
    return reg


def label_traces(traces: Iterable[Trace], registry: DAppRegistry) -> list[Trace]:
    out = []
    for t in traces:
        src, dst = registry.label_of(t.source), registry.label_of(t.target)
        if src is t.source_label and dst is t.target_label:
            out.append(t)
        else:
            out.append(dataclasses.replace(t, source_label=src, target_label=dst))
    return out


# ---------------------------------------------------------------- files

@dataclass
class IngestSummary:
    records_read: int = 0
    records_skipped: int = 0
    traces: int = 0
    per_kind: Counter = field(default_factory=Counter)
    errors: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "records_read": self.records_read,
            "records_skipped": self.records_skipped,
            "traces": self.traces,
            "per_kind": {k.value: self.per_kind.get(k, 0) for k in TraceKind},
        }


def read_jsonl(path: str | Path, lenient: bool = False,
               summary: IngestSummary | None = None) -> Iterator[tuple[int, dict]]:
    """Yield (line number, object) pairs; blank lines are ignored."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                if not isinstance(obj, dict):
                    raise ValueError("record is not a JSON object")
            except ValueError as exc:
                err = ParseError(f"{path}: {exc}", lineno)
                if not lenient:
                    raise err from None
                log.warning("skipping %s", err)
                if summary is not None:
                    summary.records_skipped += 1
                    summary.errors.append(str(err))
                continue
            yield lineno, obj


def ingest_files(paths: Iterable[str | Path], chain: Chain, lenient: bool = False,
                 registry: DAppRegistry | None = None,
                 seed_contracts: Iterable[str] = ()) -> tuple[list[Trace], IngestSummary]:
    """Parse raw files for one chain into a list of traces sorted by
    (timestamp, tx_id, ordinal)."""
    summary = IngestSummary()
    raw_type = RAW_TYPES[chain]
    records = []
    for path in paths:
        for lineno, obj in read_jsonl(path, lenient, summary):
            summary.records_read += 1
            try:
                records.append((raw_type.from_json(obj), path, lineno))
            except ParseError as exc:
                err = ParseError(f"{path}: {exc}", lineno)
                if not lenient:
                    raise err from None
                summary.records_skipped += 1
                summary.errors.append(str(err))

    # Contract discovery depends on seeing creations first.
    records.sort(key=lambda r: (r[0].timestamp, r[0].tx_id, getattr(r[0], "ordinal", 0)))
    eth = EthereumAdapter(seed_contracts)
    traces: list[Trace] = []
    for raw, path, lineno in records:
        try:
            if chain is Chain.BITCOIN:
                traces.extend(parse_bitcoin_tx(raw))
            elif chain is Chain.ETHEREUM:
                t = eth(raw)
                if t is not None:
                    traces.append(t)
            else:
                t = parse_eosio_action(raw)
                if t is not None:
                    traces.append(t)
        except (ParseError, ValueError) as exc:
            err = ParseError(f"{path}: {exc}", lineno)
            if not lenient:
                raise err from None
            summary.records_skipped += 1
            summary.errors.append(str(err))

    seen: set[tuple[str, int]] = set()
    for t in traces:
        key = (t.tx_id, t.ordinal)
        if key in seen:
            raise ParseError(f"duplicate trace key {t.tx_id}#{t.ordinal}")
        seen.add(key)

    if registry is not None:
        traces = label_traces(traces, registry)
    summary.traces = len(traces)
    summary.per_kind.update(t.kind for t in traces)
    return traces, summary


# Normalized trace file (traces.jsonl) codec.

def trace_to_dict(t: Trace) -> dict:
    d = {
        "chain": t.chain.value,
        "kind": t.kind.value,
        "source": t.source.identifier,
        "source_class": t.source.node_class.value,
        "target": t.target.identifier,
        "target_class": t.target.node_class.value,
        "weight": str(t.weight),
        "timestamp": t.timestamp,
        "tx_id": t.tx_id,
        "ordinal": t.ordinal,
        "initiator_role": t.initiator_role.value,
    }
    if t.memo is not None:
        d["memo"] = t.memo
    return d


def trace_from_dict(d: dict) -> Trace:
    chain = Chain.parse(d["chain"])
    return Trace(
        chain=chain,
        kind=TraceKind(d["kind"]),
        source=NodeId(chain, d["source"], NodeClass(d.get("source_class", "regular"))),
        target=NodeId(chain, d["target"], NodeClass(d.get("target_class", "regular"))),
        weight=Decimal(d["weight"]),
        timestamp=int(d["timestamp"]),
        tx_id=str(d["tx_id"]),
        ordinal=int(d.get("ordinal", 0)),
        memo=d.get("memo"),
        initiator_role=InitiatorRole(d.get("initiator_role", "unknown")),
    )


def write_traces(traces: Iterable[Trace], path: str | Path) -> int:
    n = 0
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for t in traces:
            fh.write(json.dumps(trace_to_dict(t), sort_keys=True, ensure_ascii=False) + "\n")
            n += 1
    return n


def read_traces(path: str | Path, lenient: bool = False) -> list[Trace]:
    traces = []
    for lineno, obj in read_jsonl(path, lenient):
        try:
            traces.append(trace_from_dict(obj))
        except (KeyError, ValueError, InvalidOperation) as exc:
            err = ParseError(f"{path}: bad trace record: {exc}", lineno)
            if not lenient:
                raise err from None
            log.warning("skipping %s", err)
    return traces
