"""
Shared domain vocabulary: chains, trace kinds, month keys, node identities
and DApp labels.

Everything here is an immutable value type.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from decimal import Decimal
from enum import Enum


class Chain(str, Enum):
    BITCOIN = "btc"
    ETHEREUM = "eth"
    EOSIO = "eos"

    @classmethod
    def parse(cls, text: str) -> "Chain":
        aliases = {
            "btc": cls.BITCOIN, "bitcoin": cls.BITCOIN,
            "eth": cls.ETHEREUM, "ethereum": cls.ETHEREUM,
            "eos": cls.EOSIO, "eosio": cls.EOSIO,
        }
        try:
            return aliases[text.strip().lower()]
        except KeyError:
            raise ValueError(f"unknown chain: {text!r}") from None


# First month with on-chain activity; used for default month ranges.
LAUNCH_MONTH = {
    Chain.BITCOIN: (2009, 1),
    Chain.ETHEREUM: (2015, 7),
    Chain.EOSIO: (2018, 6),
}


class TraceKind(str, Enum):
    MONEY_TRANSFER = "MoneyTransfer"
    ACCOUNT_CREATION = "AccountCreation"
    CONTRACT_INVOCATION = "ContractInvocation"


class NodeClass(str, Enum):
    REGULAR = "regular"
    CONTRACT = "contract"
    TXID = "txid-surrogate"


class InitiatorRole(str, Enum):
    USER = "user"
    CONTRACT = "contract"
    UNKNOWN = "unknown"


CATEGORIES = (
    "DeFi", "Exchange", "Finance", "Gambling", "Game", "High-Risk",
    "Platform", "Social", "Token", "Tool", "EIDOS",
)


@dataclass(frozen=True, order=True)
class NodeId:
    """A node in one chain's graph.

    Identity and ordering use (chain, identifier) only; node_class is
    descriptive, so the same address seen as a plain account and as a
    contract remains one node.
    """

    chain: Chain
    identifier: str
    node_class: NodeClass = field(default=NodeClass.REGULAR, compare=False)

    def __post_init__(self):
        if not self.identifier:
            raise ValueError("node identifier must be nonempty")
        if self.node_class is NodeClass.TXID and self.chain is not Chain.BITCOIN:
            raise ValueError("txid-surrogate nodes exist only on Bitcoin-style chains")

    def __str__(self) -> str:
        return self.identifier


@dataclass(frozen=True)
class DAppLabel:
    name: str
    category: str

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown DApp category: {self.category!r}")


_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")


@dataclass(frozen=True, order=True)
class MonthKey:
    year: int
    month: int

    def __post_init__(self):
        if not 1 <= self.month <= 12:
            raise ValueError(f"month out of range: {self.month}")

    @classmethod
    def parse(cls, text: str) -> "MonthKey":
        m = _MONTH_RE.match(text.strip())
        if not m:
            raise ValueError(f"expected yyyy-MM, got {text!r}")
        return cls(int(m.group(1)), int(m.group(2)))

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"

    @property
    def ordinal(self) -> int:
        return self.year * 12 + (self.month - 1)

    @classmethod
    def from_ordinal(cls, n: int) -> "MonthKey":
        return cls(n // 12, n % 12 + 1)

    def shift(self, months: int) -> "MonthKey":
        return MonthKey.from_ordinal(self.ordinal + months)

    def start_timestamp(self) -> int:
        """Unix seconds at 00:00:00 UTC on the first day of the month."""
        return int(datetime(self.year, self.month, 1, tzinfo=timezone.utc).timestamp())


@dataclass(frozen=True)
class Trace:
    """One normalized interaction (v_source -> v_target, weight, time)."""

    chain: Chain
    kind: TraceKind
    source: NodeId
    target: NodeId
    weight: Decimal
    timestamp: int
    tx_id: str
    ordinal: int = 0
    memo: str | None = None
    initiator_role: InitiatorRole = InitiatorRole.UNKNOWN
    source_label: DAppLabel | None = field(default=None, compare=False)
    target_label: DAppLabel | None = field(default=None, compare=False)

    def __post_init__(self):
        if not isinstance(self.weight, Decimal):
            object.__setattr__(self, "weight", Decimal(str(self.weight)))
        if self.weight < 0:
            raise ValueError(f"negative trace weight {self.weight} in {self.tx_id}")
        if self.kind is TraceKind.ACCOUNT_CREATION and self.weight != 1:
            raise ValueError("account creation traces carry weight 1")
        if self.timestamp < 0:
            raise ValueError("timestamp must be nonnegative")
        if self.ordinal < 0:
            raise ValueError("ordinal must be nonnegative")
        if self.source.chain is not self.chain or self.target.chain is not self.chain:
            raise ValueError("trace endpoints must belong to the trace's chain")

    @property
    def month(self) -> MonthKey:
        return month_of(self.timestamp)

    @property
    def is_dapp_related(self) -> bool:
        return self.source_label is not None or self.target_label is not None

    def categories(self) -> set[str]:
        return {lab.category for lab in (self.source_label, self.target_label) if lab is not None}


def month_of(timestamp: int) -> MonthKey:
    if timestamp < 0:
        raise ValueError("timestamp must be nonnegative")
    dt = datetime.fromtimestamp(timestamp, tz=timezone.utc)
    return MonthKey(dt.year, dt.month)


def month_range(first: MonthKey, last: MonthKey) -> list[MonthKey]:
    """Inclusive ascending list of months from `first` to `last`."""
    if first > last:
        raise ValueError(f"empty month range: {first} > {last}")
    return [MonthKey.from_ordinal(n) for n in range(first.ordinal, last.ordinal + 1)]
