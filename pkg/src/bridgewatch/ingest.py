"""Receipt decoding: JSONL transaction receipts -> fact store.

The decoder is configuration-driven so it can be pointed at any bridge
without code changes. A config JSON document provides:

* per-chain settings: role (``source``/``target``), finality window,
  bridge-controlled addresses;
* static relations: token mappings and wrapped-native tokens;
* an event map: topic0 (or a human-readable event signature, hashed with
  keccak-256) -> target bridge relation plus a declarative field
  extraction plan over the log's topics and data words.

Field extraction plan entries::

    {"topic": N, "type": T}        value from topics[N]
    {"data": N, "type": T}         value from the N-th 32-byte data word
    {"const": "..."}               literal value
    {"source": "log_address"}      the emitting contract address

with ``type`` one of ``address`` (32-byte word that must be a left-padded
20-byte address), ``uint`` (decimal string), ``id`` (decimal string),
``chain_id`` (integer), or ``enum`` (requires ``"labels": {"0": "..."}``).

ERC-20 ``Transfer`` logs are decoded unconditionally (any emitter is a
token contract). Bridge events are decoded only from logs emitted by a
configured bridge address. A receipt moving native value into a bridge
address yields a native escrow fact with pseudo event index 0, ordering
it before every log of the transaction.

Decoding problems that affect a single log (wrong topic arity, a 32-byte
beneficiary that is not a valid address) produce a warning and suppress
that fact only; the rest of the receipt still decodes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import facts as f
from .keccak import TRANSFER_TOPIC, event_topic

__all__ = [
    "IngestError",
    "ConfigError",
    "LogEntry",
    "TransactionReceipt",
    "BridgeDecoderConfig",
    "IngestReport",
    "decode_erc20_transfer",
    "decode_receipt",
    "ingest_jsonl",
    "load_config",
]

NATIVE_EVENT_INDEX = 0  # native value transfers precede all logs

# Bridge relations a config event entry may target.
_DECODABLE = {
    "sc_token_deposited": f.ScTokenDepositedFact,
    "tc_token_deposited": f.TcTokenDepositedFact,
    "tc_token_withdrew": f.TcTokenWithdrewFact,
    "sc_token_withdrew": f.ScTokenWithdrewFact,
    "sc_withdrawal": f.ScWithdrawalFact,
}


class IngestError(ValueError):
    """Malformed receipt input (carries file/line context in the message)."""


class ConfigError(ValueError):
    """Malformed or incomplete decoder configuration."""


def _as_uint(value: Any, name: str) -> int:
    if isinstance(value, bool):
        raise IngestError(f"{name}: expected unsigned integer, got bool")
    if isinstance(value, int):
        if value < 0:
            raise IngestError(f"{name}: negative value {value}")
        return value
    if isinstance(value, str):
        try:
            return int(value, 16) if value.startswith("0x") else int(value, 10)
        except ValueError:
            pass
    raise IngestError(f"{name}: cannot parse unsigned integer from {value!r}")


def _as_amount(value: Any, name: str) -> str:
    return f.canonical_amount(_as_uint(value, name), name)


def _hex_bytes(value: str, name: str) -> bytes:
    if not isinstance(value, str) or not value.startswith("0x"):
        raise IngestError(f"{name}: expected 0x-prefixed hex, got {value!r}")
    try:
        return bytes.fromhex(value[2:])
    except ValueError as exc:
        raise IngestError(f"{name}: invalid hex: {value!r}") from exc


@dataclass(frozen=True)
class LogEntry:
    address: str
    topics: tuple[str, ...]
    data: str
    log_index: int

    @classmethod
    def from_json(cls, obj: dict) -> "LogEntry":
        try:
            return cls(
                address=f.canonical_address(obj["address"], "log address"),
                topics=tuple(t.lower() for t in obj["topics"]),
                data=obj.get("data", "0x").lower(),
                log_index=_as_uint(obj["logIndex"], "logIndex"),
            )
        except KeyError as exc:
            raise IngestError(f"log entry missing field {exc.args[0]!r}") from exc


@dataclass(frozen=True)
class TransactionReceipt:
    chain_id: int
    tx_hash: str
    block_number: int
    block_timestamp: int
    from_address: str
    to_address: str
    value: str
    status: int
    gas_used: int
    logs: tuple[LogEntry, ...]

    @classmethod
    def from_json(cls, obj: dict) -> "TransactionReceipt":
        try:
            logs = tuple(LogEntry.from_json(entry) for entry in obj.get("logs", []))
            indexes = [entry.log_index for entry in logs]
            if indexes != sorted(set(indexes)):
                raise IngestError("logIndex values must be strictly increasing")
            return cls(
                chain_id=_as_uint(obj["chainId"], "chainId"),
                tx_hash=f.canonical_tx_hash(obj["txHash"], "txHash"),
                block_number=_as_uint(obj["blockNumber"], "blockNumber"),
                block_timestamp=_as_uint(obj["blockTimestamp"], "blockTimestamp"),
                from_address=f.canonical_address(obj["from"], "from"),
                to_address=f.canonical_address(obj["to"], "to"),
                value=_as_amount(obj["value"], "value"),
                status=_as_uint(obj["status"], "status"),
                gas_used=_as_uint(obj["gasUsed"], "gasUsed"),
                logs=logs,
            )
        except KeyError as exc:
            raise IngestError(f"receipt missing field {exc.args[0]!r}") from exc
        except f.EncodingError as exc:
            raise IngestError(str(exc)) from exc


@dataclass(frozen=True)
class EventPlan:
    """One decodable bridge event: topic0 -> relation + field plan."""

    topic0: str
    relation: str
    fields: dict[str, dict]


@dataclass(frozen=True)
class ChainConfig:
    chain_id: int
    role: str  # "source" | "target"
    finality_seconds: int
    bridge_addresses: tuple[str, ...]


@dataclass(frozen=True)
class BridgeDecoderConfig:
    chains: dict[int, ChainConfig]
    events: dict[str, EventPlan]  # keyed by topic0
    token_mappings: tuple[f.TokenMappingFact, ...]
    wrapped_native_tokens: tuple[f.WrappedNativeTokenFact, ...]

    def static_facts(self) -> list:
        out: list = []
        for chain in self.chains.values():
            out.append(f.CctxFinalityFact(chain.chain_id, chain.finality_seconds))
            for addr in chain.bridge_addresses:
                out.append(f.BridgeControlledAddressFact(chain.chain_id, addr))
        out.extend(self.token_mappings)
        out.extend(self.wrapped_native_tokens)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "BridgeDecoderConfig":
        chains: dict[int, ChainConfig] = {}
        for key, spec in obj.get("chains", {}).items():
            chain_id = int(key)
            role = spec.get("role", "source")
            if role not in ("source", "target"):
                raise ConfigError(f"chain {chain_id}: role must be source|target")
            finality = spec.get("finality_seconds")
            if not isinstance(finality, int) or finality <= 0:
                raise ConfigError(f"chain {chain_id}: finality_seconds must be positive")
            chains[chain_id] = ChainConfig(
                chain_id=chain_id,
                role=role,
                finality_seconds=finality,
                bridge_addresses=tuple(
                    f.canonical_address(a, "bridge address")
                    for a in spec.get("bridge_addresses", [])
                ),
            )
        if not chains:
            raise ConfigError("config declares no chains")
        events: dict[str, EventPlan] = {}
        for entry in obj.get("events", []):
            if "topic0" in entry:
                topic0 = entry["topic0"].lower()
            elif "signature" in entry:
                topic0 = event_topic(entry["signature"])
            else:
                raise ConfigError("event entry needs 'topic0' or 'signature'")
            relation = entry.get("fact")
            if relation not in _DECODABLE:
                raise ConfigError(f"event entry targets unknown relation {relation!r}")
            events[topic0] = EventPlan(topic0, relation, dict(entry.get("fields", {})))
        mappings = tuple(
            f.TokenMappingFact(int(m[0]), int(m[1]), m[2], m[3], m[4])
            for m in obj.get("token_mappings", [])
        )
        wrapped = tuple(
            f.WrappedNativeTokenFact(int(w[0]), w[1])
            for w in obj.get("wrapped_native_tokens", [])
        )
        return cls(chains, events, mappings, wrapped)


def load_config(path: str | Path) -> BridgeDecoderConfig:
    with open(path, encoding="utf-8") as fh:
        return BridgeDecoderConfig.from_json(json.load(fh))


@dataclass
class IngestReport:
    receipts: int = 0
    facts_per_relation: dict[str, int] = field(default_factory=dict)
    warnings: list[str] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "receipts": self.receipts,
            "facts_per_relation": dict(sorted(self.facts_per_relation.items())),
            "warning_count": len(self.warnings),
            "warnings": list(self.warnings),
        }


class _FieldError(ValueError):
    pass


def _word_to_address(word: bytes, what: str) -> str:
    if len(word) != 32:
        raise _FieldError(f"{what}: expected 32 bytes, got {len(word)}")
    if any(word[:12]):
        raise _FieldError(f"{what}: 32-byte value is not a valid 20-byte address")
    return "0x" + word[12:].hex()


def _extract_field(plan: dict, log: LogEntry, what: str):
    if "const" in plan:
        return plan["const"]
    if plan.get("source") == "log_address":
        return log.address
    if "topic" in plan:
        idx = plan["topic"]
        if idx >= len(log.topics):
            raise _FieldError(f"{what}: topic {idx} missing (log has {len(log.topics)})")
        word = _hex_bytes(log.topics[idx], what)
    elif "data" in plan:
        data = _hex_bytes(log.data, what)
        off = 32 * plan["data"]
        word = data[off : off + 32]
        if len(word) != 32:
            raise _FieldError(f"{what}: data word {plan['data']} out of range")
    else:
        raise ConfigError(f"{what}: field plan needs 'topic', 'data', 'const' or 'source'")
    ftype = plan.get("type", "uint")
    if ftype == "address":
        return _word_to_address(word, what)
    value = int.from_bytes(word, "big")
    if ftype in ("uint", "id"):
        return str(value)
    if ftype == "chain_id":
        return value
    if ftype == "enum":
        labels = plan.get("labels", {})
        try:
            return labels[str(value)]
        except KeyError:
            raise _FieldError(f"{what}: no enum label for value {value}")
    raise ConfigError(f"{what}: unknown field type {ftype!r}")


def decode_erc20_transfer(log: LogEntry, receipt: TransactionReceipt):
    """Decode one log as an ERC-20 Transfer, if it is one.

    Returns ``(fact, None)`` on success, ``(None, warning)`` for a
    malformed Transfer log, and ``(None, None)`` when topic0 does not
    match.
    """
    if not log.topics or log.topics[0] != TRANSFER_TOPIC:
        return None, None
    if len(log.topics) != 3:
        return None, (
            f"tx {receipt.tx_hash} log {log.log_index}: Transfer with "
            f"{len(log.topics)} topics (expected 3)"
        )
    try:
        from_addr = _word_to_address(_hex_bytes(log.topics[1], "from"), "from")
        to_addr = _word_to_address(_hex_bytes(log.topics[2], "to"), "to")
        data = _hex_bytes(log.data, "data")
        if len(data) < 32:
            raise _FieldError("data: expected at least 32 bytes for amount")
        amount = str(int.from_bytes(data[:32], "big"))
    except (_FieldError, IngestError) as exc:
        return None, f"tx {receipt.tx_hash} log {log.log_index}: {exc}"
    return (
        f.Erc20TransferFact(
            tx_hash=receipt.tx_hash,
            chain_id=receipt.chain_id,
            event_index=log.log_index,
            token=log.address,
            from_address=from_addr,
            to_address=to_addr,
            amount=amount,
        ),
        None,
    )


def _decode_bridge_event(
    plan: EventPlan, log: LogEntry, receipt: TransactionReceipt
) -> tuple[Any, str | None]:
    kwargs: dict[str, Any] = {"tx_hash": receipt.tx_hash, "event_index": log.log_index}
    try:
        for name, fplan in plan.fields.items():
            kwargs[name] = _extract_field(fplan, log, name)
        return _DECODABLE[plan.relation](**kwargs), None
    except (_FieldError, f.EncodingError, IngestError, TypeError) as exc:
        return None, (
            f"tx {receipt.tx_hash} log {log.log_index} ({plan.relation}): {exc}"
        )


def decode_receipt(
    receipt: TransactionReceipt, config: BridgeDecoderConfig
) -> tuple[list, list[str]]:
    """Decode one receipt into facts.

    Always emits a transaction fact; adds one erc20_transfer per Transfer
    log, bridge facts per the config event map (bridge-emitted logs only),
    and a native escrow fact when the receipt moves value onto a bridge
    address. Returns ``(facts, warnings)``.
    """
    chain = config.chains.get(receipt.chain_id)
    if chain is None:
        raise ConfigError(f"receipt chain {receipt.chain_id} not in decoder config")
    out: list = []
    warnings: list[str] = []
    out.append(
        f.TransactionFact(
            timestamp=receipt.block_timestamp,
            chain_id=receipt.chain_id,
            tx_hash=receipt.tx_hash,
            block_number=receipt.block_number,
            from_address=receipt.from_address,
            to_address=receipt.to_address,
            value=receipt.value,
            status=1 if receipt.status == 1 else 0,
            gas_used=receipt.gas_used,
        )
    )
    bridge_addrs = set(chain.bridge_addresses)
    for log in receipt.logs:
        fact, warning = decode_erc20_transfer(log, receipt)
        if warning:
            warnings.append(warning)
        if fact is not None:
            out.append(fact)
            continue
        if log.topics and log.address in bridge_addrs:
            plan = config.events.get(log.topics[0])
            if plan is not None:
                fact, warning = _decode_bridge_event(plan, log, receipt)
                if warning:
                    warnings.append(warning)
                if fact is not None:
                    out.append(fact)
    if receipt.value != "0" and receipt.to_address in bridge_addrs:
        escrow_type = f.ScDepositFact if chain.role == "source" else f.TcWithdrawalFact
        out.append(
            escrow_type(
                tx_hash=receipt.tx_hash,
                event_index=NATIVE_EVENT_INDEX,
                sender=receipt.from_address,
                bridge_addr=receipt.to_address,
                amount=receipt.value,
            )
        )
    return out, warnings


def ingest_jsonl(
    receipts_path: str | Path, config: BridgeDecoderConfig | str | Path
) -> tuple[f.FactStore, IngestReport]:
    """Decode a JSONL receipts file into a sealed store plus a report.

    The store contains the union of all decoded facts and the config's
    static facts. A malformed JSON line fails fast with its line number.
    """
    if not isinstance(config, BridgeDecoderConfig):
        config = load_config(config)
    store = f.FactStore()
    report = IngestReport()
    store.insert_all(config.static_facts())
    path = Path(receipts_path)
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise IngestError(f"{path}:{line_no}: malformed JSON: {exc.msg}") from exc
            try:
                receipt = TransactionReceipt.from_json(obj)
                decoded, warnings = decode_receipt(receipt, config)
            except IngestError as exc:
                raise IngestError(f"{path}:{line_no}: {exc}") from exc
            report.receipts += 1
            report.warnings.extend(warnings)
            store.insert_all(decoded)
    store.seal()
    report.facts_per_relation = {
        name: count for name, count in store.relation_counts().items() if count
    }
    return store, report
