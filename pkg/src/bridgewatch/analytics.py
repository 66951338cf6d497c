"""Deviation taxonomy and statistics over rule outputs and raw facts.

Seven anomaly kinds cover the deviations the monitor can witness:

* ``SingleTokenEvent`` / ``SingleBridgeEvent``: inside one transaction, a
  token-level movement touching the bridge without the paired bridge
  event, or vice versa (lost user funds, inconsistent bridge behavior,
  phishing bait).
* ``UnmatchedLocalDeposit`` / ``UnmatchedLocalWithdrawal``: a locally
  valid leg that never joined a cross-chain transaction. Release-side
  unmatched tuples are the dangerous direction (funds leave the bridge
  with no escrow backing them) and are graded ``critical``.
* ``FinalityViolation``: both legs match on every join key but the time
  gap is inside the origin chain's finality window.
* ``DuplicateId``: one identifier reused across several release-side
  bridge events (replay signature).
* ``AmbiguousMatch``: one identifier participating in more than one
  cross-chain derivation.

In the composed report, local tuples that are explained by a finality
violation are not re-reported as unmatched; the raw matched/unmatched
accounting (matched + unmatched = captured, per local rule) is kept
separately and is unaffected by that precedence.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Mapping

from .facts import FactStore
from .ingest import IngestReport
from .rules import RULE_NAMES, RuleOutputs

__all__ = [
    "Anomaly",
    "LatencyStats",
    "PriceTable",
    "local_mismatches",
    "unmatched_local",
    "finality_violations",
    "duplicate_ids",
    "latency_stats",
    "build_report",
    "report_to_json",
]

SEVERITY = {
    "SingleTokenEvent": "low",
    "SingleBridgeEvent": "medium",
    "UnmatchedLocalDeposit": "medium",
    "UnmatchedLocalWithdrawal": "medium",
    "FinalityViolation": "high",
    "DuplicateId": "critical",
    "AmbiguousMatch": "high",
}


@dataclass(frozen=True)
class Anomaly:
    kind: str
    chain_ids: tuple[int, ...]
    tx_hashes: tuple[str, ...]
    amount: str
    evidence: tuple[tuple[str, str], ...]
    severity: str = ""

    def __post_init__(self):
        if not self.severity:
            object.__setattr__(self, "severity", SEVERITY[self.kind])

    def sort_key(self):
        return (self.kind, self.chain_ids, self.tx_hashes, self.evidence)

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "severity": self.severity,
            "chain_ids": list(self.chain_ids),
            "tx_hashes": list(self.tx_hashes),
            "amount": self.amount,
            "evidence": {k: v for k, v in self.evidence},
        }


def _evidence(**kv) -> tuple[tuple[str, str], ...]:
    return tuple(sorted((k, str(v)) for k, v in kv.items()))


# ---------------------------------------------------------------------------
# per-transaction token/bridge event pairing
# ---------------------------------------------------------------------------

def local_mismatches(store: FactStore) -> list[Anomaly]:
    """Flag transactions where token-level and bridge-level events do not
    come in pairs.

    For every transaction with at least one event touching a
    bridge-controlled address: token/native movements without any bridge
    event yield one ``SingleTokenEvent``; bridge events without any
    token/native movement yield one ``SingleBridgeEvent``. Amounts are
    aggregated over the offending side.
    """
    if not store.sealed:
        raise RuntimeError("store must be sealed")
    token_side: dict[str, list] = {}
    bridge_side: dict[str, list] = {}

    for tr in store.relation("erc20_transfer"):
        if (tr.chain_id, tr.to_address) in store.bridge_addresses or (
            tr.chain_id,
            tr.from_address,
        ) in store.bridge_addresses:
            token_side.setdefault(tr.tx_hash, []).append(tr)
    for name in ("sc_deposit", "tc_withdrawal", "sc_withdrawal"):
        for esc in store.relation(name):
            token_side.setdefault(esc.tx_hash, []).append(esc)
    for name in (
        "sc_token_deposited",
        "tc_token_deposited",
        "tc_token_withdrew",
        "sc_token_withdrew",
    ):
        for evt in store.relation(name):
            bridge_side.setdefault(evt.tx_hash, []).append(evt)

    def chain_of(tx_hash: str, fallback) -> int:
        txs = store.transactions_by_hash.get(tx_hash)
        if txs:
            return min(t.chain_id for t in txs)
        return fallback

    out: list[Anomaly] = []
    for tx_hash, events in token_side.items():
        if tx_hash in bridge_side:
            continue
        total = sum(int(e.amount) for e in events)
        chain = chain_of(tx_hash, getattr(events[0], "chain_id", 0))
        out.append(
            Anomaly(
                kind="SingleTokenEvent",
                chain_ids=(chain,),
                tx_hashes=(tx_hash,),
                amount=str(total),
                evidence=_evidence(event_count=len(events)),
            )
        )
    for tx_hash, events in bridge_side.items():
        if tx_hash in token_side:
            continue
        total = sum(int(e.amount) for e in events)
        chain = chain_of(tx_hash, 0)
        out.append(
            Anomaly(
                kind="SingleBridgeEvent",
                chain_ids=(chain,),
                tx_hashes=(tx_hash,),
                amount=str(total),
                evidence=_evidence(event_count=len(events)),
            )
        )
    return sorted(out, key=Anomaly.sort_key)


# ---------------------------------------------------------------------------
# matched/unmatched accounting over rule outputs
# ---------------------------------------------------------------------------

def _deposit_escrow_key(t) -> tuple:
    # shared fields a rule-4 tuple preserves from its escrow constituent
    return (t.timestamp, t.tx_hash, t[2], t.sender, t.beneficiary, t.dst_token,
            t.orig_token, t.orig_chain_id, t.dst_chain_id, t.amount)


def _release_key(t) -> tuple:
    # shared fields a rule-4/8 tuple preserves from its release constituent
    return (t.timestamp, t.tx_hash, t[2], t.beneficiary, t.dst_token,
            t.chain_id, t.amount)


def matched_projections(outputs: RuleOutputs) -> tuple[set, set, set, set]:
    """Project rule-4/8 tuples back onto their constituents.

    Returns (deposit escrow keys, deposit release keys, withdrawal escrow
    keys, withdrawal release keys).
    """
    dep_escrow = set()
    dep_release = set()
    for c in outputs.rule4:
        dep_escrow.add((c.orig_timestamp, c.orig_tx_hash, c.deposit_id, c.sender,
                        c.beneficiary, c.dst_token, c.orig_token, c.orig_chain_id,
                        c.dst_chain_id, c.amount))
        dep_release.add((c.dst_timestamp, c.dst_tx_hash, c.deposit_id,
                         c.beneficiary, c.dst_token, c.dst_chain_id, c.amount))
    wdr_escrow = set()
    wdr_release = set()
    for c in outputs.rule8:
        wdr_escrow.add((c.orig_timestamp, c.orig_tx_hash, c.withdrawal_id, c.sender,
                        c.beneficiary, c.orig_token, c.dst_token, c.dst_chain_id,
                        c.orig_chain_id, c.amount))
        wdr_release.add((c.dst_timestamp, c.dst_tx_hash, c.withdrawal_id,
                         c.beneficiary, c.dst_token, c.dst_chain_id, c.amount))
    return dep_escrow, dep_release, wdr_escrow, wdr_release


def _wdr_escrow_key(t) -> tuple:
    return (t.timestamp, t.tx_hash, t[2], t.sender, t.beneficiary, t.orig_token,
            t.dst_token, t.dst_chain_id, t.orig_chain_id, t.amount)


def match_accounting(outputs: RuleOutputs) -> dict[int, tuple[int, int]]:
    """(matched, unmatched) per local rule; matched + unmatched = captured."""
    dep_escrow, dep_release, wdr_escrow, wdr_release = matched_projections(outputs)
    result: dict[int, tuple[int, int]] = {}
    for rule_id, tuples, keys, keyfn in (
        (1, outputs.rule1, dep_escrow, _deposit_escrow_key),
        (2, outputs.rule2, dep_escrow, _deposit_escrow_key),
        (3, outputs.rule3, dep_release, _release_key),
        (5, outputs.rule5, wdr_escrow, _wdr_escrow_key),
        (6, outputs.rule6, wdr_escrow, _wdr_escrow_key),
        (7, outputs.rule7, wdr_release, _release_key),
    ):
        matched = sum(1 for t in tuples if keyfn(t) in keys)
        result[rule_id] = (matched, len(tuples) - matched)
    return result


def unmatched_local(outputs: RuleOutputs) -> list[Anomaly]:
    """One anomaly per local tuple that joined no cross-chain derivation.

    Rules 1/2 and 5/6 are the escrow side; rules 3 and 7 are the release
    side (loss-of-funds direction, graded ``critical``).
    """
    dep_escrow, dep_release, wdr_escrow, wdr_release = matched_projections(outputs)
    out: list[Anomaly] = []

    def emit(kind: str, side: str, rule_id: int, t, chain: int, severity: str):
        out.append(
            Anomaly(
                kind=kind,
                chain_ids=(chain,),
                tx_hashes=(t.tx_hash,),
                amount=t.amount,
                evidence=_evidence(side=side, rule=RULE_NAMES[rule_id], id=t[2]),
                severity=severity,
            )
        )

    for rule_id, tuples in ((1, outputs.rule1), (2, outputs.rule2)):
        for t in tuples:
            if _deposit_escrow_key(t) not in dep_escrow:
                emit("UnmatchedLocalDeposit", "escrow", rule_id, t, t.orig_chain_id, "medium")
    for t in outputs.rule3:
        if _release_key(t) not in dep_release:
            emit("UnmatchedLocalDeposit", "release", 3, t, t.chain_id, "critical")
    for rule_id, tuples in ((5, outputs.rule5), (6, outputs.rule6)):
        for t in tuples:
            if _wdr_escrow_key(t) not in wdr_escrow:
                emit("UnmatchedLocalWithdrawal", "escrow", rule_id, t, t.orig_chain_id, "medium")
    for t in outputs.rule7:
        if _release_key(t) not in wdr_release:
            emit("UnmatchedLocalWithdrawal", "release", 7, t, t.chain_id, "critical")
    return sorted(out, key=Anomaly.sort_key)


# ---------------------------------------------------------------------------
# finality violations
# ---------------------------------------------------------------------------

def finality_violations(store: FactStore, outputs: RuleOutputs) -> list[Anomaly]:
    """Pairs of local tuples that agree on every cross-chain join key but
    sit inside the origin chain's finality window.

    Each anomaly carries the observed gap and the required window; the
    pair would be a valid cross-chain transaction had the origin leg been
    ``window - gap + 1`` seconds earlier.
    """
    out: list[Anomaly] = []

    def scan(escrows: Iterable, releases: Iterable, direction: str):
        by_key: dict[tuple, list] = {}
        for esc in escrows:
            key = (esc[2], esc.beneficiary, esc.dst_token, esc.dst_chain_id, esc.amount)
            by_key.setdefault(key, []).append(esc)
        for rel in releases:
            key = (rel[2], rel.beneficiary, rel.dst_token, rel.chain_id, rel.amount)
            for esc in by_key.get(key, ()):
                window = store.finality.get(esc.orig_chain_id)
                if window is None:
                    continue
                gap = rel.timestamp - esc.timestamp
                if esc.timestamp + window < rel.timestamp:
                    continue  # valid pair, not a violation
                out.append(
                    Anomaly(
                        kind="FinalityViolation",
                        chain_ids=(esc.orig_chain_id, rel.chain_id),
                        tx_hashes=tuple(sorted((esc.tx_hash, rel.tx_hash))),
                        amount=rel.amount,
                        evidence=_evidence(
                            direction=direction, id=rel[2], gap=gap, window=window,
                            escrow_tx=esc.tx_hash, release_tx=rel.tx_hash,
                        ),
                    )
                )

    scan(list(outputs.rule1) + list(outputs.rule2), outputs.rule3, "deposit")
    scan(list(outputs.rule5) + list(outputs.rule6), outputs.rule7, "withdrawal")
    return sorted(out, key=Anomaly.sort_key)


# ---------------------------------------------------------------------------
# identifier reuse
# ---------------------------------------------------------------------------

def duplicate_ids(store: FactStore, outputs: RuleOutputs | None = None) -> list[Anomaly]:
    """Identifier reuse across bridge events, plus multi-derivation
    cross-chain transactions.

    A deposit id shared by several source-chain deposit events, or a
    withdrawal id shared by several source-chain (release side)
    withdrawal events, yields one ``DuplicateId`` with the occurrence
    count. When rule outputs are supplied, ids participating in more than
    one cross-chain derivation yield one ``AmbiguousMatch`` each.
    """
    if not store.sealed:
        raise RuntimeError("store must be sealed")
    out: list[Anomaly] = []
    for index, id_field, relation in (
        (store.deposits_by_id, "deposit_id", "sc_token_deposited"),
        (store.withdrawals_by_id, "withdrawal_id", "sc_token_withdrew"),
    ):
        for value, facts_list in index.items():
            if len(facts_list) < 2:
                continue
            chains = set()
            for fct in facts_list:
                for tx in store.transactions_by_hash.get(fct.tx_hash, ()):
                    chains.add(tx.chain_id)
            out.append(
                Anomaly(
                    kind="DuplicateId",
                    chain_ids=tuple(sorted(chains)),
                    tx_hashes=tuple(sorted({fct.tx_hash for fct in facts_list})),
                    amount=str(sum(int(fct.amount) for fct in facts_list)),
                    evidence=_evidence(
                        **{id_field: value, "relation": relation, "count": len(facts_list)}
                    ),
                )
            )
    if outputs is not None:
        for cctx_set, id_field in ((outputs.rule4, "deposit_id"), (outputs.rule8, "withdrawal_id")):
            by_id: dict[str, list] = {}
            for c in cctx_set:
                by_id.setdefault(c[6], []).append(c)
            for value, cctxs in by_id.items():
                if len(cctxs) < 2:
                    continue
                hashes = sorted(
                    {c.orig_tx_hash for c in cctxs} | {c.dst_tx_hash for c in cctxs}
                )
                chains = sorted({c.orig_chain_id for c in cctxs} | {c.dst_chain_id for c in cctxs})
                out.append(
                    Anomaly(
                        kind="AmbiguousMatch",
                        chain_ids=tuple(chains),
                        tx_hashes=tuple(hashes),
                        amount=str(sum(int(c.amount) for c in cctxs)),
                        evidence=_evidence(
                            **{id_field: value, "derivations": len(cctxs)}
                        ),
                    )
                )
    return sorted(out, key=Anomaly.sort_key)


# ---------------------------------------------------------------------------
# latency and value statistics
# ---------------------------------------------------------------------------

PriceTable = Mapping[tuple[int, str], tuple[str, int]]  # (chain, token) -> (usd per unit, decimals)


@dataclass(frozen=True)
class LatencyStats:
    count: int
    min: int | None = None
    max: int | None = None
    avg: str | None = None
    std: str | None = None
    median: int | None = None
    total_value: str = "0"
    total_usd: str | None = None

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "min": self.min,
            "max": self.max,
            "avg": self.avg,
            "std": self.std,
            "median": self.median,
            "total_value": self.total_value,
            "total_usd": self.total_usd,
        }


def _two_decimals(value: Fraction) -> str:
    with localcontext() as ctx:
        ctx.prec = 60
        dec = Decimal(value.numerator) / Decimal(value.denominator)
        return str(dec.quantize(Decimal("0.01")))


def latency_stats(cctxs: Iterable, prices: PriceTable | None = None) -> LatencyStats:
    """Exact latency statistics over one set of cross-chain tuples.

    Latency is ``dst_timestamp - orig_timestamp``. Average and standard
    deviation (population) are computed as exact rationals and rendered
    to two decimals; the median of an even-sized set is the lower-middle
    element. USD totals are best-effort from the optional price table.
    """
    items = list(cctxs)
    if not items:
        return LatencyStats(count=0)
    latencies = sorted(c.dst_timestamp - c.orig_timestamp for c in items)
    n = len(latencies)
    mean = Fraction(sum(latencies), n)
    variance = sum((Fraction(x) - mean) ** 2 for x in latencies) / n
    with localcontext() as ctx:
        ctx.prec = 60
        std = (Decimal(variance.numerator) / Decimal(variance.denominator)).sqrt()
        std_str = str(std.quantize(Decimal("0.01")))
    total_value = sum(int(c.amount) for c in items)
    total_usd = None
    if prices is not None:
        acc = Fraction(0)
        for c in items:
            entry = prices.get((c.orig_chain_id, c.orig_token))
            if entry is None:
                continue
            usd_per_unit, decimals = entry
            acc += Fraction(int(c.amount), 10**decimals) * Fraction(usd_per_unit)
        total_usd = _two_decimals(acc)
    return LatencyStats(
        count=n,
        min=latencies[0],
        max=latencies[-1],
        avg=_two_decimals(mean),
        std=std_str,
        median=latencies[(n - 1) // 2],
        total_value=str(total_value),
        total_usd=total_usd,
    )


# ---------------------------------------------------------------------------
# composed report
# ---------------------------------------------------------------------------

def build_report(
    store: FactStore,
    outputs: RuleOutputs,
    prices: PriceTable | None = None,
    ingest_report: IngestReport | None = None,
) -> dict:
    """Compose the full deterministic analysis report.

    Anomalies are grouped by kind; unmatched local tuples explained by a
    finality violation appear only under ``FinalityViolation``. The raw
    Table-style accounting (captured/matched/unmatched per local rule) is
    reported separately and keeps the identity captured = matched +
    unmatched.
    """
    violations = finality_violations(store, outputs)
    explained: set[tuple[str, str]] = set()
    for v in violations:
        vid = dict(v.evidence)["id"]
        for tx_hash in v.tx_hashes:
            explained.add((tx_hash, vid))

    unmatched = [
        a
        for a in unmatched_local(outputs)
        if (a.tx_hashes[0], dict(a.evidence)["id"]) not in explained
    ]
    anomalies = (
        local_mismatches(store)
        + unmatched
        + violations
        + duplicate_ids(store, outputs)
    )
    grouped: dict[str, list[dict]] = {}
    for a in sorted(anomalies, key=Anomaly.sort_key):
        grouped.setdefault(a.kind, []).append(a.as_dict())

    accounting = match_accounting(outputs)
    table = {
        RULE_NAMES[rule_id]: {
            "captured": matched + unmatched_count,
            "matched": matched,
            "unmatched": unmatched_count,
        }
        for rule_id, (matched, unmatched_count) in sorted(accounting.items())
    }

    report = {
        "schema_version": 1,
        "relation_counts": {
            name: count for name, count in sorted(store.relation_counts().items()) if count
        },
        "rule_counts": outputs.counts(),
        "local_rule_accounting": table,
        "anomaly_counts": {kind: len(items) for kind, items in sorted(grouped.items())},
        "anomalies": {kind: items for kind, items in sorted(grouped.items())},
        "latency": {
            "deposits": latency_stats(outputs.rule4, prices).as_dict(),
            "withdrawals": latency_stats(outputs.rule8, prices).as_dict(),
        },
        "ingest": ingest_report.as_dict() if ingest_report is not None else None,
    }
    return report


def total_anomalies(report: dict) -> int:
    return sum(report["anomaly_counts"].values())


def report_to_json(report: dict) -> str:
    """Canonical JSON rendering (stable key order, 2-space indent)."""
    return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=True) + "\n"
