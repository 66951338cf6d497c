"""Typed fact relations and the in-memory fact store.

Thirteen relations describe everything the monitor knows about a pair of
bridged chains: per-transaction envelopes, token/native value movements,
bridge-emitted deposit/withdrawal events, and four static relations
(bridge addresses, token mappings, wrapped-native tokens, per-chain
finality windows).

Facts are immutable, hashable values with canonical field encodings:

* addresses: ``0x`` + 40 lowercase hex digits
* transaction hashes: ``0x`` + 64 lowercase hex digits
* amounts: base-10 strings over unsigned 256-bit integers, no leading zeros
* identifiers (deposit/withdrawal ids, token standards): opaque strings,
  compared by equality, free of tabs and newlines

The store keeps one set per relation (set semantics: duplicates collapse,
insertion order never matters) plus secondary indexes built when the store
is sealed. Persistence is one tab-separated ``<relation>.facts`` file per
relation, compatible with common Datalog engine fact-file layouts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Callable, ClassVar, Iterable, Iterator

__all__ = [
    "EncodingError",
    "FactsParseError",
    "FactStoreError",
    "TransactionFact",
    "Erc20TransferFact",
    "ScDepositFact",
    "ScTokenDepositedFact",
    "TcTokenDepositedFact",
    "TcWithdrawalFact",
    "TcTokenWithdrewFact",
    "ScWithdrawalFact",
    "ScTokenWithdrewFact",
    "BridgeControlledAddressFact",
    "TokenMappingFact",
    "WrappedNativeTokenFact",
    "CctxFinalityFact",
    "RELATIONS",
    "FactStore",
    "canonical_address",
    "canonical_tx_hash",
    "canonical_amount",
    "load_facts_dir",
    "dump_facts_dir",
]

MAX_UINT256 = (1 << 256) - 1

_ADDRESS_RE = re.compile(r"0x[0-9a-f]{40}\Z")
_TX_HASH_RE = re.compile(r"0x[0-9a-f]{64}\Z")
_AMOUNT_RE = re.compile(r"(0|[1-9][0-9]*)\Z")


class EncodingError(ValueError):
    """A field failed canonical encoding; ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


class FactsParseError(ValueError):
    """A ``.facts`` file line could not be parsed (carries file and line)."""

    def __init__(self, path: Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = path
        self.line_no = line_no


class FactStoreError(RuntimeError):
    """Store misuse: inserting after seal, conflicting finality, etc."""


def canonical_address(value: str, field: str = "address") -> str:
    """Lowercase and validate a 20-byte 0x-prefixed hex address."""
    if not isinstance(value, str):
        raise EncodingError(field, f"expected address string, got {type(value).__name__}")
    v = value.lower()
    if not _ADDRESS_RE.match(v):
        raise EncodingError(field, f"not a canonical 20-byte hex address: {value!r}")
    return v


def canonical_tx_hash(value: str, field: str = "tx_hash") -> str:
    """Lowercase and validate a 32-byte 0x-prefixed hex hash."""
    if not isinstance(value, str):
        raise EncodingError(field, f"expected hash string, got {type(value).__name__}")
    v = value.lower()
    if not _TX_HASH_RE.match(v):
        raise EncodingError(field, f"not a canonical 32-byte hex hash: {value!r}")
    return v


def canonical_amount(value: str | int, field: str = "amount") -> str:
    """Validate a 256-bit unsigned amount, returned as a decimal string."""
    if isinstance(value, int):
        if value < 0 or value > MAX_UINT256:
            raise EncodingError(field, f"amount out of uint256 range: {value}")
        return str(value)
    if not isinstance(value, str) or not _AMOUNT_RE.match(value):
        raise EncodingError(field, f"not a canonical decimal amount: {value!r}")
    if int(value) > MAX_UINT256:
        raise EncodingError(field, f"amount out of uint256 range: {value}")
    return value


def _uint(value, field: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise EncodingError(field, f"expected unsigned integer, got {value!r}")
    if value < 0:
        raise EncodingError(field, f"must be non-negative: {value}")
    return value


def _chain_id(value, field: str) -> int:
    v = _uint(value, field)
    if v == 0:
        raise EncodingError(field, "chain id must be nonzero")
    return v


def _opaque(value, field: str) -> str:
    if not isinstance(value, str):
        raise EncodingError(field, f"expected string, got {type(value).__name__}")
    if "\t" in value or "\n" in value or "\r" in value:
        raise EncodingError(field, "must not contain tab or newline")
    return value


def _status(value, field: str) -> int:
    if value not in (0, 1):
        raise EncodingError(field, f"status must be 0 or 1, got {value!r}")
    return value


@dataclass(frozen=True, slots=True)
class _Fact:
    """Base for all relations; field order equals on-disk column order."""

    RELATION: ClassVar[str] = ""

    def columns(self) -> tuple[str, ...]:
        return tuple(str(getattr(self, f.name)) for f in fields(self))

    @classmethod
    def from_columns(cls, cols: list[str]):
        expected = len(fields(cls))
        if len(cols) != expected:
            raise EncodingError(
                cls.RELATION, f"expected {expected} columns, got {len(cols)}"
            )
        kwargs = {}
        for f, raw in zip(fields(cls), cols):
            kwargs[f.name] = int(raw) if f.type == "int" else raw
        return cls(**kwargs)


@dataclass(frozen=True, slots=True)
class TransactionFact(_Fact):
    """One transaction envelope: 9 columns, three of which (block_number,
    to_address, gas_used) are never constrained by any rule."""

    RELATION: ClassVar[str] = "transaction"

    timestamp: int
    chain_id: int
    tx_hash: str
    block_number: int
    from_address: str
    to_address: str
    value: str
    status: int
    gas_used: int

    def __post_init__(self):
        object.__setattr__(self, "timestamp", _uint(self.timestamp, "timestamp"))
        object.__setattr__(self, "chain_id", _chain_id(self.chain_id, "chain_id"))
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "block_number", _uint(self.block_number, "block_number"))
        object.__setattr__(self, "from_address", canonical_address(self.from_address, "from_address"))
        object.__setattr__(self, "to_address", canonical_address(self.to_address, "to_address"))
        object.__setattr__(self, "value", canonical_amount(self.value, "value"))
        object.__setattr__(self, "status", _status(self.status, "status"))
        object.__setattr__(self, "gas_used", _uint(self.gas_used, "gas_used"))


@dataclass(frozen=True, slots=True)
class Erc20TransferFact(_Fact):
    """An ERC-20 Transfer event (token = emitting contract)."""

    RELATION: ClassVar[str] = "erc20_transfer"

    tx_hash: str
    chain_id: int
    event_index: int
    token: str
    from_address: str
    to_address: str
    amount: str

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "chain_id", _chain_id(self.chain_id, "chain_id"))
        object.__setattr__(self, "event_index", _uint(self.event_index, "event_index"))
        object.__setattr__(self, "token", canonical_address(self.token, "token"))
        object.__setattr__(self, "from_address", canonical_address(self.from_address, "from_address"))
        object.__setattr__(self, "to_address", canonical_address(self.to_address, "to_address"))
        object.__setattr__(self, "amount", canonical_amount(self.amount))


@dataclass(frozen=True, slots=True)
class ScDepositFact(_Fact):
    """Native value escrowed into the bridge on the source chain."""

    RELATION: ClassVar[str] = "sc_deposit"

    tx_hash: str
    event_index: int
    sender: str
    bridge_addr: str
    amount: str

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "event_index", _uint(self.event_index, "event_index"))
        object.__setattr__(self, "sender", canonical_address(self.sender, "sender"))
        object.__setattr__(self, "bridge_addr", canonical_address(self.bridge_addr, "bridge_addr"))
        object.__setattr__(self, "amount", canonical_amount(self.amount))


@dataclass(frozen=True, slots=True)
class ScTokenDepositedFact(_Fact):
    """Bridge deposit event on the source chain."""

    RELATION: ClassVar[str] = "sc_token_deposited"

    tx_hash: str
    event_index: int
    deposit_id: str
    beneficiary: str
    dst_token: str
    orig_token: str
    dst_chain_id: int
    standard: str
    amount: str

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "event_index", _uint(self.event_index, "event_index"))
        object.__setattr__(self, "deposit_id", _opaque(self.deposit_id, "deposit_id"))
        object.__setattr__(self, "beneficiary", canonical_address(self.beneficiary, "beneficiary"))
        object.__setattr__(self, "dst_token", canonical_address(self.dst_token, "dst_token"))
        object.__setattr__(self, "orig_token", canonical_address(self.orig_token, "orig_token"))
        object.__setattr__(self, "dst_chain_id", _chain_id(self.dst_chain_id, "dst_chain_id"))
        object.__setattr__(self, "standard", _opaque(self.standard, "standard"))
        object.__setattr__(self, "amount", canonical_amount(self.amount))


@dataclass(frozen=True, slots=True)
class TcTokenDepositedFact(_Fact):
    """Bridge deposit event on the target chain (release of wrapped funds)."""

    RELATION: ClassVar[str] = "tc_token_deposited"

    tx_hash: str
    event_index: int
    deposit_id: str
    beneficiary: str
    dst_token: str
    amount: str

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "event_index", _uint(self.event_index, "event_index"))
        object.__setattr__(self, "deposit_id", _opaque(self.deposit_id, "deposit_id"))
        object.__setattr__(self, "beneficiary", canonical_address(self.beneficiary, "beneficiary"))
        object.__setattr__(self, "dst_token", canonical_address(self.dst_token, "dst_token"))
        object.__setattr__(self, "amount", canonical_amount(self.amount))


@dataclass(frozen=True, slots=True)
class TcWithdrawalFact(_Fact):
    """Native value escrowed into the bridge on the target chain."""

    RELATION: ClassVar[str] = "tc_withdrawal"

    tx_hash: str
    event_index: int
    sender: str
    bridge_addr: str
    amount: str

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "event_index", _uint(self.event_index, "event_index"))
        object.__setattr__(self, "sender", canonical_address(self.sender, "sender"))
        object.__setattr__(self, "bridge_addr", canonical_address(self.bridge_addr, "bridge_addr"))
        object.__setattr__(self, "amount", canonical_amount(self.amount))


@dataclass(frozen=True, slots=True)
class TcTokenWithdrewFact(_Fact):
    """Bridge withdrawal event on the target chain (escrow side)."""

    RELATION: ClassVar[str] = "tc_token_withdrew"

    tx_hash: str
    event_index: int
    withdrawal_id: str
    beneficiary: str
    orig_token: str
    dst_token: str
    dst_chain_id: int
    standard: str
    amount: str

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "event_index", _uint(self.event_index, "event_index"))
        object.__setattr__(self, "withdrawal_id", _opaque(self.withdrawal_id, "withdrawal_id"))
        object.__setattr__(self, "beneficiary", canonical_address(self.beneficiary, "beneficiary"))
        object.__setattr__(self, "orig_token", canonical_address(self.orig_token, "orig_token"))
        object.__setattr__(self, "dst_token", canonical_address(self.dst_token, "dst_token"))
        object.__setattr__(self, "dst_chain_id", _chain_id(self.dst_chain_id, "dst_chain_id"))
        object.__setattr__(self, "standard", _opaque(self.standard, "standard"))
        object.__setattr__(self, "amount", canonical_amount(self.amount))


@dataclass(frozen=True, slots=True)
class ScWithdrawalFact(_Fact):
    """Native value released by the bridge on the source chain."""

    RELATION: ClassVar[str] = "sc_withdrawal"

    tx_hash: str
    event_index: int
    bridge_addr: str
    beneficiary: str
    amount: str

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "event_index", _uint(self.event_index, "event_index"))
        object.__setattr__(self, "bridge_addr", canonical_address(self.bridge_addr, "bridge_addr"))
        object.__setattr__(self, "beneficiary", canonical_address(self.beneficiary, "beneficiary"))
        object.__setattr__(self, "amount", canonical_amount(self.amount))


@dataclass(frozen=True, slots=True)
class ScTokenWithdrewFact(_Fact):
    """Bridge withdrawal event on the source chain (release side)."""

    RELATION: ClassVar[str] = "sc_token_withdrew"

    tx_hash: str
    event_index: int
    withdrawal_id: str
    beneficiary: str
    dst_token: str
    amount: str

    def __post_init__(self):
        object.__setattr__(self, "tx_hash", canonical_tx_hash(self.tx_hash))
        object.__setattr__(self, "event_index", _uint(self.event_index, "event_index"))
        object.__setattr__(self, "withdrawal_id", _opaque(self.withdrawal_id, "withdrawal_id"))
        object.__setattr__(self, "beneficiary", canonical_address(self.beneficiary, "beneficiary"))
        object.__setattr__(self, "dst_token", canonical_address(self.dst_token, "dst_token"))
        object.__setattr__(self, "amount", canonical_amount(self.amount))


@dataclass(frozen=True, slots=True)
class BridgeControlledAddressFact(_Fact):
    RELATION: ClassVar[str] = "bridge_controlled_address"

    chain_id: int
    address: str

    def __post_init__(self):
        object.__setattr__(self, "chain_id", _chain_id(self.chain_id, "chain_id"))
        object.__setattr__(self, "address", canonical_address(self.address))


@dataclass(frozen=True, slots=True)
class TokenMappingFact(_Fact):
    RELATION: ClassVar[str] = "token_mapping"

    orig_chain_id: int
    dst_chain_id: int
    orig_token: str
    dst_token: str
    standard: str

    def __post_init__(self):
        object.__setattr__(self, "orig_chain_id", _chain_id(self.orig_chain_id, "orig_chain_id"))
        object.__setattr__(self, "dst_chain_id", _chain_id(self.dst_chain_id, "dst_chain_id"))
        object.__setattr__(self, "orig_token", canonical_address(self.orig_token, "orig_token"))
        object.__setattr__(self, "dst_token", canonical_address(self.dst_token, "dst_token"))
        object.__setattr__(self, "standard", _opaque(self.standard, "standard"))


@dataclass(frozen=True, slots=True)
class WrappedNativeTokenFact(_Fact):
    RELATION: ClassVar[str] = "wrapped_native_token"

    chain_id: int
    token: str

    def __post_init__(self):
        object.__setattr__(self, "chain_id", _chain_id(self.chain_id, "chain_id"))
        object.__setattr__(self, "token", canonical_address(self.token, "token"))


@dataclass(frozen=True, slots=True)
class CctxFinalityFact(_Fact):
    """Per-chain finality window in seconds (fraud-proof window or block
    finality); a cross-chain pair is legitimate only strictly after it."""

    RELATION: ClassVar[str] = "cctx_finality"

    chain_id: int
    finality_seconds: int

    def __post_init__(self):
        object.__setattr__(self, "chain_id", _chain_id(self.chain_id, "chain_id"))
        fin = _uint(self.finality_seconds, "finality_seconds")
        if fin == 0:
            raise EncodingError("finality_seconds", "must be positive")
        object.__setattr__(self, "finality_seconds", fin)


FACT_TYPES: tuple[type[_Fact], ...] = (
    TransactionFact,
    Erc20TransferFact,
    ScDepositFact,
    ScTokenDepositedFact,
    TcTokenDepositedFact,
    TcWithdrawalFact,
    TcTokenWithdrewFact,
    ScWithdrawalFact,
    ScTokenWithdrewFact,
    BridgeControlledAddressFact,
    TokenMappingFact,
    WrappedNativeTokenFact,
    CctxFinalityFact,
)

RELATIONS: dict[str, type[_Fact]] = {t.RELATION: t for t in FACT_TYPES}

# Relations whose tuples are tied to a specific transaction.
EVENT_RELATIONS = (
    "erc20_transfer",
    "sc_deposit",
    "sc_token_deposited",
    "tc_token_deposited",
    "tc_withdrawal",
    "tc_token_withdrew",
    "sc_withdrawal",
    "sc_token_withdrew",
)


def _index_by(facts: Iterable[_Fact], key: Callable) -> dict:
    out: dict = {}
    for f in facts:
        out.setdefault(key(f), []).append(f)
    return out


class FactStore:
    """Set-semantics container for the thirteen relations.

    Single-writer while building; ``seal()`` freezes it and builds the
    secondary indexes, after which it is safe for concurrent readers.
    """

    def __init__(self):
        self._relations: dict[str, set] = {name: set() for name in RELATIONS}
        self._sealed = False
        # indexes, populated by seal()
        self.transactions_by_hash: dict[str, list[TransactionFact]] = {}
        self.by_tx: dict[str, dict[str, list]] = {}
        self.deposits_by_id: dict[str, list[ScTokenDepositedFact]] = {}
        self.withdrawals_by_id: dict[str, list[ScTokenWithdrewFact]] = {}
        self.bridge_addresses: set[tuple[int, str]] = set()
        self.token_mappings: set[tuple[int, int, str, str, str]] = set()
        self.wrapped_native: set[tuple[int, str]] = set()
        self.finality: dict[int, int] = {}

    @property
    def sealed(self) -> bool:
        return self._sealed

    def insert(self, fact: _Fact) -> None:
        """Insert one fact (idempotent for identical tuples)."""
        if self._sealed:
            raise FactStoreError("store is sealed")
        relation = fact.RELATION
        if relation not in self._relations:
            raise FactStoreError(f"unknown relation {relation!r}")
        if isinstance(fact, CctxFinalityFact):
            for existing in self._relations[relation]:
                if existing.chain_id == fact.chain_id and existing != fact:
                    raise FactStoreError(
                        f"conflicting cctx_finality for chain {fact.chain_id}: "
                        f"{existing.finality_seconds} vs {fact.finality_seconds}"
                    )
        self._relations[relation].add(fact)

    def insert_all(self, facts: Iterable[_Fact]) -> None:
        for f in facts:
            self.insert(f)

    def relation(self, name: str) -> frozenset:
        return frozenset(self._relations[name])

    def count(self, name: str) -> int:
        return len(self._relations[name])

    def total_facts(self) -> int:
        return sum(len(s) for s in self._relations.values())

    def relation_counts(self) -> dict[str, int]:
        return {name: len(self._relations[name]) for name in RELATIONS}

    def __iter__(self) -> Iterator[_Fact]:
        for name in RELATIONS:
            yield from self._relations[name]

    def __eq__(self, other) -> bool:
        if not isinstance(other, FactStore):
            return NotImplemented
        return self._relations == other._relations

    def __hash__(self):  # stores are mutable until sealed
        return id(self)

    def chain_ids(self) -> set[int]:
        """Every chain id referenced by any fact (excluding cctx_finality)."""
        ids: set[int] = set()
        for t in self._relations["transaction"]:
            ids.add(t.chain_id)
        for t in self._relations["erc20_transfer"]:
            ids.add(t.chain_id)
        for t in self._relations["sc_token_deposited"]:
            ids.add(t.dst_chain_id)
        for t in self._relations["tc_token_withdrew"]:
            ids.add(t.dst_chain_id)
        for t in self._relations["bridge_controlled_address"]:
            ids.add(t.chain_id)
        for t in self._relations["wrapped_native_token"]:
            ids.add(t.chain_id)
        for t in self._relations["token_mapping"]:
            ids.add(t.orig_chain_id)
            ids.add(t.dst_chain_id)
        return ids

    def seal(self) -> "FactStore":
        """Freeze the store and build secondary indexes. Returns self."""
        if self._sealed:
            return self
        self.transactions_by_hash = _index_by(
            self._relations["transaction"], lambda f: f.tx_hash
        )
        self.by_tx = {
            name: _index_by(self._relations[name], lambda f: f.tx_hash)
            for name in EVENT_RELATIONS
        }
        self.deposits_by_id = _index_by(
            self._relations["sc_token_deposited"], lambda f: f.deposit_id
        )
        self.withdrawals_by_id = _index_by(
            self._relations["sc_token_withdrew"], lambda f: f.withdrawal_id
        )
        self.bridge_addresses = {
            (f.chain_id, f.address) for f in self._relations["bridge_controlled_address"]
        }
        self.token_mappings = {
            (f.orig_chain_id, f.dst_chain_id, f.orig_token, f.dst_token, f.standard)
            for f in self._relations["token_mapping"]
        }
        self.wrapped_native = {
            (f.chain_id, f.token) for f in self._relations["wrapped_native_token"]
        }
        self.finality = {
            f.chain_id: f.finality_seconds for f in self._relations["cctx_finality"]
        }
        self._sealed = True
        return self


def load_facts_dir(path: str | Path) -> FactStore:
    """Load a directory of ``<relation>.facts`` TSV files into a new store.

    Missing files mean empty relations. Any line with the wrong column
    count (or a malformed field) raises :class:`FactsParseError` naming the
    file and 1-based line number.
    """
    root = Path(path)
    if not root.is_dir():
        raise FileNotFoundError(f"not a directory: {root}")
    store = FactStore()
    for name, fact_type in RELATIONS.items():
        file_path = root / f"{name}.facts"
        if not file_path.exists():
            continue
        with open(file_path, encoding="utf-8", newline="") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.rstrip("\n")
                if not line:
                    continue
                try:
                    store.insert(fact_type.from_columns(line.split("\t")))
                except (EncodingError, FactStoreError) as exc:
                    raise FactsParseError(file_path, line_no, str(exc)) from exc
    return store


def dump_facts_dir(store: FactStore, path: str | Path) -> list[Path]:
    """Write one sorted ``<relation>.facts`` file per non-empty relation.

    Rows are sorted lexicographically so dumps are deterministic;
    ``load_facts_dir`` on the result reproduces the store exactly.
    """
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for name in RELATIONS:
        facts = store.relation(name)
        if not facts:
            continue
        rows = sorted("\t".join(f.columns()) for f in facts)
        file_path = root / f"{name}.facts"
        with open(file_path, "w", encoding="utf-8", newline="\n") as fh:
            for row in rows:
                fh.write(row + "\n")
        written.append(file_path)
    return written
