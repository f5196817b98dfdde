"""
Seeded synthetic corpora with planted ground truth.

Every generator is a pure function of its arguments: same arguments, same
traces in the same order.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import Decimal

import numpy as np

from .graph import GraphKind, MonthlyGraph, build_graph
from .metrics import MetricSeries
from .model import (
    Chain, InitiatorRole, MonthKey, NodeClass, NodeId, Trace, TraceKind, month_range,
)

DEFAULT_MONTH = MonthKey(2020, 1)
MIN_EOS_TRANSFER = Decimal("0.0001")
SECONDS_PER_DAY = 86400


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.uint64(seed & 0xFFFFFFFFFFFFFFFF))


def _timestamps(rng: np.random.Generator, month: MonthKey, count: int) -> list[int]:
    """Sorted timestamps spread over the first 28 days of `month`."""
    start = month.start_timestamp()
    return sorted(int(x) for x in start + rng.integers(0, 28 * SECONDS_PER_DAY, size=count))


def _mt(chain, src, dst, amount, ts, tx, ordinal=0, memo=None, role=InitiatorRole.USER):
    return Trace(chain, TraceKind.MONEY_TRANSFER, src, dst, amount, ts, tx, ordinal, memo, role)


# ---------------------------------------------------------------- power law

def power_law_degree_pmf(n: int, alpha: float) -> tuple[np.ndarray, np.ndarray]:
    """Degrees 1..kmax and their probabilities, p(k) proportional to k**alpha.

    Degrees whose expected frequency among n draws is below one node are
    rejected; the remaining mass is renormalised.
    """
    k = np.arange(1, n + 1, dtype=np.int64)
    p = k.astype(float) ** alpha
    p /= p.sum()
    keep = n * p >= 1.0
    k, p = k[keep], p[keep]
    return k, p / p.sum()


def gen_power_law_graph(n: int, alpha_target: float, seed: int,
                        chain: Chain = Chain.ETHEREUM, month: MonthKey = DEFAULT_MONTH) -> list[Trace]:
    """Money transfers whose out-degree sequence follows k**alpha_target.

    Each node draws an out-degree by inverse-CDF sampling and sends one
    transfer to that many distinct, uniformly chosen other nodes.
    """
    if n < 100:
        raise ValueError(f"n must be at least 100, got {n}")
    if alpha_target >= -1:
        raise ValueError(f"alpha_target must be < -1, got {alpha_target}")
    rng = _rng(seed)
    ks, p = power_law_degree_pmf(n, alpha_target)
    cdf = np.cumsum(p)
    draws = ks[np.minimum(np.searchsorted(cdf, rng.random(n), side="right"), len(ks) - 1)]
    start = month.start_timestamp()
    nodes = [NodeId(chain, f"p{i:06d}") for i in range(n)]
    traces = []
    one = Decimal(1)
    for i, k in enumerate(draws.tolist()):
        picks = rng.choice(n - 1, size=k, replace=False)
        ts = start + i % (28 * SECONDS_PER_DAY)
        for j, t in enumerate(picks.tolist()):
            dst = t if t < i else t + 1
            traces.append(_mt(chain, nodes[i], nodes[dst], one, ts, f"pl{i}", j))
    return traces


# ---------------------------------------------------------------- EIDOS loop

EIDOS_CONTRACT = "eidosonecoin"
EIDOS_TOKEN = "eidostoken"


def gen_eidos_loop(users: int, rounds: int, seed: int, amount: Decimal = MIN_EOS_TRANSFER,
                   month: MonthKey = DEFAULT_MONTH, raw: bool = False) -> list:
    """Deposit / refund / token-issue loop: per user per round, a transfer in,
    a transfer back, and one invocation of the token contract.

    With raw=True, returns EOSIO action dicts (including the payer/payee
    notification receipts) instead of normalized traces.
    """
    if users < 1 or rounds < 1:
        raise ValueError("users and rounds must be >= 1")
    chain = Chain.EOSIO
    rng = _rng(seed)
    contract = NodeId(chain, EIDOS_CONTRACT, NodeClass.CONTRACT)
    token = NodeId(chain, EIDOS_TOKEN, NodeClass.CONTRACT)
    stamps = _timestamps(rng, month, users * rounds)
    out = []
    i = 0
    for r in range(rounds):
        for u in range(users):
            user = f"eidosuser{u:04d}"
            ts = stamps[i]
            tx = f"eidos-{r}-{u}"
            i += 1
            if raw:
                out.extend(_raw_transfer(tx, 0, ts, user, EIDOS_CONTRACT, amount, "deposit", user, False))
                out.extend(_raw_transfer(tx, 3, ts, EIDOS_CONTRACT, user, amount, "refund",
                                         EIDOS_CONTRACT, True))
                out.append(dict(tx_id=tx, ordinal=6, timestamp=ts, contract=EIDOS_TOKEN,
                                action_name="transfer", receiver=EIDOS_TOKEN,
                                initiator=EIDOS_CONTRACT, initiator_is_contract=True,
                                payer=EIDOS_TOKEN, payee=user, quantity="1.0000 EIDOS"))
                continue
            node = NodeId(chain, user)
            out.append(_mt(chain, node, contract, amount, ts, tx, 0, "deposit"))
            out.append(_mt(chain, contract, node, amount, ts, tx, 1, "refund", InitiatorRole.CONTRACT))
            out.append(Trace(chain, TraceKind.CONTRACT_INVOCATION, contract, token, Decimal(1), ts, tx, 2,
                             initiator_role=InitiatorRole.CONTRACT))
    return out


def _raw_transfer(tx, ordinal, ts, payer, payee, amount, memo, initiator, is_contract) -> list[dict]:
    """The eosio.token transfer action plus its two notification receipts."""
    base = dict(tx_id=tx, timestamp=ts, contract="eosio.token", action_name="transfer",
                payer=payer, payee=payee, quantity=f"{amount} EOS", memo=memo,
                initiator=initiator, initiator_is_contract=is_contract)
    return [dict(base, ordinal=ordinal + k, receiver=rcv)
            for k, rcv in enumerate(("eosio.token", payer, payee))]


# ---------------------------------------------------------------- spam

def gen_spam_campaign(spammers: int, recipients_per: int, amount, memo: str, seed: int,
                      month: MonthKey = DEFAULT_MONTH, prefix: str = "spam",
                      chain: Chain = Chain.EOSIO) -> list[Trace]:
    """Each spammer sends one `amount` transfer carrying `memo` to
    `recipients_per` fresh accounts. Nobody replies."""
    if recipients_per < 1:
        raise ValueError("recipients_per must be >= 1")
    amount = Decimal(str(amount))
    rng = _rng(seed)
    stamps = _timestamps(rng, month, spammers * recipients_per)
    out = []
    i = 0
    for s in range(spammers):
        src = NodeId(chain, f"{prefix}er{s:03d}")
        for r in range(recipients_per):
            dst = NodeId(chain, f"{prefix}{s:03d}rcv{r:05d}")
            out.append(_mt(chain, src, dst, amount, stamps[i], f"{prefix}-{s}-{r}", 0, memo))
            i += 1
    return out


def gen_benign_traffic(accounts: int, transfers: int, seed: int, month: MonthKey = DEFAULT_MONTH,
                       chain: Chain = Chain.EOSIO, prefix: str = "user") -> list[Trace]:
    """Ordinary transfers among a pool of accounts: amounts of at least 0.01,
    varied memos, and roughly half of all transfers answered."""
    rng = _rng(seed)
    names = [NodeId(chain, f"{prefix}{i:05d}") for i in range(accounts)]
    src = rng.integers(0, accounts, size=transfers)
    dst = rng.integers(0, accounts, size=transfers)
    cents = rng.integers(1, 100_000, size=transfers)
    reply = rng.random(transfers) < 0.5
    memo_ids = rng.integers(0, 50, size=transfers)
    stamps = _timestamps(rng, month, transfers)
    out = []
    for i in range(transfers):
        a, b = int(src[i]), int(dst[i])
        if a == b:
            b = (b + 1) % accounts
        amt = Decimal(int(cents[i])).scaleb(-2)
        memo = f"memo {int(memo_ids[i])}"
        out.append(_mt(chain, names[a], names[b], amt, stamps[i], f"{prefix}-{i}", 0, memo))
        if reply[i]:
            out.append(_mt(chain, names[b], names[a], amt, stamps[i], f"{prefix}-{i}", 1, "thanks"))
    return out


# ---------------------------------------------------------------- series / spikes

def gen_metric_spike(baseline: float, length: int, spike_index: int, magnitude: float,
                     seed: int = 0, chain: Chain = Chain.BITCOIN, start: MonthKey = DEFAULT_MONTH,
                     metric: str = "synthetic") -> MetricSeries:
    if not 3 <= spike_index <= length - 4:
        raise ValueError(f"spike_index {spike_index} too close to the ends of a {length}-long series")
    months = month_range(start, start.shift(length - 1))
    values = [float(baseline)] * length
    values[spike_index] = float(baseline) + float(magnitude)
    return MetricSeries(chain, "", metric, list(zip(months, values)))


@dataclass
class SpikeCorpus:
    traces: list[Trace]
    months: list[MonthKey]
    spike_month: MonthKey
    planted: list[NodeId]


def gen_spike_corpus(seed: int, months: int = 9, spike_index: int = 4, background: int = 300,
                     pool: int = 400, hubs: int = 1, spokes: int = 1000,
                     chain: Chain = Chain.EOSIO, start: MonthKey = MonthKey(2019, 1)) -> SpikeCorpus:
    """Flat monthly MTG traffic (exactly `background` transfers per month)
    plus `hubs` out-stars of `spokes` edges each in the spike month."""
    rng = _rng(seed)
    span = month_range(start, start.shift(months - 1))
    accounts = [NodeId(chain, f"acct{i:04d}") for i in range(pool)]
    out = []
    for mi, month in enumerate(span):
        src = rng.integers(0, pool, size=background)
        dst = rng.integers(0, pool - 1, size=background)
        stamps = _timestamps(rng, month, background)
        for i in range(background):
            a, b = int(src[i]), int(dst[i])
            b = b if b < a else b + 1
            amt = Decimal(int(rng.integers(1, 10_000))).scaleb(-4)
            out.append(_mt(chain, accounts[a], accounts[b], amt, stamps[i], f"bg-{mi}-{i}"))
    spike_month = span[spike_index]
    planted = [NodeId(chain, f"hub{chr(ord('a') + h)}{seed}") for h in range(hubs)]
    stamps = _timestamps(rng, spike_month, hubs * spokes)
    i = 0
    for h, hub in enumerate(planted):
        for s in range(spokes):
            dst = NodeId(chain, f"spoke{h}x{s:05d}")
            out.append(_mt(chain, hub, dst, MIN_EOS_TRANSFER, stamps[i], f"hub-{h}-{s}"))
            i += 1
    return SpikeCorpus(out, span, spike_month, planted)


# ---------------------------------------------------------------- structural corpora

def gen_utxo_txs(count: int, seed: int, month: MonthKey = DEFAULT_MONTH, keys: int = 200) -> list[dict]:
    """Raw Bitcoin-style transactions (JSON-ready dicts), coinbases included."""
    rng = _rng(seed)
    stamps = _timestamps(rng, month, count)
    out = []
    for i in range(count):
        n_in = 0 if rng.random() < 0.1 else int(rng.integers(1, 4))
        n_out = int(rng.integers(1, 4))
        legs = lambda n: [{"pubkey": f"k{int(rng.integers(0, keys)):04d}",
                           "amount": str(Decimal(int(rng.integers(1, 10**8))).scaleb(-8))}
                          for _ in range(n)]
        out.append({"tx_id": f"{seed:04d}{i:08x}", "timestamp": stamps[i],
                    "inputs": legs(n_in), "outputs": legs(n_out)})
    return out


def gen_creation_traces(accounts: int, seed: int, chain: Chain = Chain.EOSIO,
                        months: list[MonthKey] | None = None) -> list[Trace]:
    """Account creations forming a random forest: every new account gets one
    creator drawn from the accounts created before it."""
    rng = _rng(seed)
    months = months or [DEFAULT_MONTH]
    roots = max(1, accounts // 50)
    names = [NodeId(chain, f"acc{i:05d}") for i in range(accounts)]
    out = []
    for i in range(roots, accounts):
        parent = names[int(rng.integers(0, i))]
        month = months[i * len(months) // accounts]
        ts = month.start_timestamp() + int(rng.integers(0, 28 * SECONDS_PER_DAY))
        out.append(Trace(chain, TraceKind.ACCOUNT_CREATION, parent, names[i], Decimal(1), ts,
                         f"create-{i}", 0, initiator_role=InitiatorRole.USER))
    return out


def gen_eosio_transfer_actions(count: int, seed: int, month: MonthKey = DEFAULT_MONTH,
                               accounts: int = 50) -> list[dict]:
    """Raw eosio.token transfers, each with its payer and payee notifications,
    interleaved with a few non-transfer actions."""
    rng = _rng(seed)
    stamps = _timestamps(rng, month, count)
    out = []
    for i in range(count):
        a, b = (int(x) for x in rng.choice(accounts, size=2, replace=False))
        amt = Decimal(int(rng.integers(1, 10**6))).scaleb(-4)
        out.extend(_raw_transfer(f"t{seed}-{i}", 0, stamps[i], f"user{a:03d}", f"user{b:03d}",
                                 amt, f"m{i % 7}", f"user{a:03d}", False))
        if i % 5 == 0:
            out.append(dict(tx_id=f"t{seed}-{i}", ordinal=3, timestamp=stamps[i], contract="dicegame",
                            action_name="bet", receiver="dicegame", initiator=f"user{a:03d}"))
    return out


def gen_random_graph(n: int, m: int, seed: int, chain: Chain = Chain.ETHEREUM,
                     kind: GraphKind = GraphKind.CIG, month: MonthKey = DEFAULT_MONTH) -> MonthlyGraph:
    """n nodes (isolated ones included) and m uniformly random directed
    traces; self-loops and repeated pairs are allowed."""
    rng = _rng(seed)
    nodes = [NodeId(chain, f"v{i:04d}") for i in range(n)]
    src = rng.integers(0, n, size=m).tolist()
    dst = rng.integers(0, n, size=m).tolist()
    ts = month.start_timestamp()
    traces = [Trace(chain, kind.trace_kind, nodes[a], nodes[b], Decimal(1), ts, f"r{i}", 0)
              for i, (a, b) in enumerate(zip(src, dst))]
    g = build_graph(traces, kind, month, chain)
    for v in nodes:
        g.add_node(v)
    return g


# ---------------------------------------------------------------- raw export

def traces_to_raw(traces: list[Trace], notifications: bool = True) -> list[dict]:
    """Render normalized traces back into the chain's raw JSONL schema so a
    synthetic corpus can go through ingest. Bitcoin traces are not
    convertible (use gen_utxo_txs)."""
    out = []
    for t in traces:
        if t.chain is Chain.EOSIO:
            out.extend(_eos_raw(t, notifications))
        elif t.chain is Chain.ETHEREUM:
            out.append(_eth_raw(t))
        else:
            raise ValueError("Bitcoin traces cannot be rendered as raw transactions")
    return out


def _flag(role: InitiatorRole) -> bool | None:
    return None if role is InitiatorRole.UNKNOWN else role is InitiatorRole.CONTRACT


def _eos_raw(t: Trace, notifications: bool) -> list[dict]:
    base = dict(tx_id=t.tx_id, timestamp=t.timestamp, initiator=t.source.identifier,
                initiator_is_contract=_flag(t.initiator_role))
    ordinal = 3 * t.ordinal
    if t.kind is TraceKind.MONEY_TRANSFER:
        rec = dict(base, contract="eosio.token", action_name="transfer", payer=t.source.identifier,
                   payee=t.target.identifier, quantity=f"{t.weight} EOS", memo=t.memo)
        receivers = ["eosio.token"] + ([t.source.identifier, t.target.identifier] if notifications else [])
        return [dict(rec, ordinal=ordinal + k, receiver=r) for k, r in enumerate(receivers)]
    if t.kind is TraceKind.ACCOUNT_CREATION:
        return [dict(base, ordinal=ordinal, contract="eosio", action_name="newaccount", receiver="eosio",
                     payer=t.source.identifier, payee=t.target.identifier)]
    rec = dict(base, ordinal=ordinal, contract=t.target.identifier, action_name="invoke",
               receiver=t.target.identifier)
    if t.memo is not None:
        rec["memo"] = t.memo
    return [rec]


def _eth_raw(t: Trace) -> dict:
    trace_type = "internal-call" if t.initiator_role is InitiatorRole.CONTRACT else "external"
    rec = dict(tx_id=t.tx_id, ordinal=t.ordinal, timestamp=t.timestamp, **{"from": t.source.identifier},
               to=t.target.identifier, value="0", input_data=0, trace_type=trace_type)
    if t.kind is TraceKind.MONEY_TRANSFER:
        rec.update(value=str(t.weight), to_is_contract=False)
    elif t.kind is TraceKind.ACCOUNT_CREATION:
        rec.update(trace_type="internal-create")
    else:
        rec.update(input_data=4, to_is_contract=True)
    return rec
