"""Cross-chain rule evaluation over a sealed fact store.

Eight rules validate bridge traffic. Rules 1-3 certify the two legs of a
token deposit (escrow on the source chain, release on the target chain);
rule 4 correlates them into cross-chain deposit transactions. Rules 5-8
mirror them for withdrawals. Every rule is a conjunctive query with set
semantics: a tuple is derived exactly when every conjunct holds, and a
single local event participates in as many cross-chain tuples as the data
supports (identifier reuse yields multiple derivations by design; the
analytics layer flags the reuse).

The two cross-chain rules additionally require the release to land
strictly after the origin chain's finality window:

    orig_timestamp + finality(orig_chain) < dst_timestamp

Boundary equality is a non-match.

Implementation is hand-coded hash joins keyed on tx_hash for the local
rules and on the (id, beneficiary, dst_token, dst_chain, amount) join key
for rules 4/8. The ``oracle`` module re-derives every rule with naive
nested loops; the test suite holds the two evaluators equal.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, NamedTuple

from .facts import FactStore

__all__ = [
    "ConfigurationError",
    "ScValidNativeTokenDeposit",
    "ScValidErc20TokenDeposit",
    "TcValidErc20TokenDeposit",
    "CctxValidDeposit",
    "TcValidNativeTokenWithdrawal",
    "TcValidErc20TokenWithdrawal",
    "ScValidErc20TokenWithdrawal",
    "CctxValidWithdrawal",
    "RuleOutputs",
    "eval_rule1",
    "eval_rule2",
    "eval_rule3",
    "eval_rule4",
    "eval_rule5",
    "eval_rule6",
    "eval_rule7",
    "eval_rule8",
    "eval_all",
    "write_rule_outputs_csv",
]


class ConfigurationError(RuntimeError):
    """The store references chains without a finality window."""


class ScValidNativeTokenDeposit(NamedTuple):
    timestamp: int
    tx_hash: str
    deposit_id: str
    sender: str
    bridge_addr: str
    beneficiary: str
    dst_token: str
    orig_token: str
    orig_chain_id: int
    dst_chain_id: int
    standard: str
    amount: str


class ScValidErc20TokenDeposit(NamedTuple):
    timestamp: int
    tx_hash: str
    deposit_id: str
    sender: str
    bridge_addr: str
    beneficiary: str
    dst_token: str
    orig_token: str
    orig_chain_id: int
    dst_chain_id: int
    standard: str
    amount: str


class TcValidErc20TokenDeposit(NamedTuple):
    timestamp: int
    tx_hash: str
    deposit_id: str
    beneficiary: str
    dst_token: str
    chain_id: int
    amount: str


class CctxValidDeposit(NamedTuple):
    orig_chain_id: int
    orig_timestamp: int
    orig_tx_hash: str
    dst_chain_id: int
    dst_timestamp: int
    dst_tx_hash: str
    deposit_id: str
    orig_token: str
    dst_token: str
    sender: str
    beneficiary: str
    amount: str


class TcValidNativeTokenWithdrawal(NamedTuple):
    timestamp: int
    tx_hash: str
    withdrawal_id: str
    sender: str
    bridge_addr: str
    beneficiary: str
    orig_token: str
    dst_token: str
    dst_chain_id: int
    orig_chain_id: int
    standard: str
    amount: str


class TcValidErc20TokenWithdrawal(NamedTuple):
    timestamp: int
    tx_hash: str
    withdrawal_id: str
    sender: str
    bridge_addr: str
    beneficiary: str
    orig_token: str
    dst_token: str
    dst_chain_id: int
    orig_chain_id: int
    standard: str
    amount: str


class ScValidErc20TokenWithdrawal(NamedTuple):
    timestamp: int
    tx_hash: str
    withdrawal_id: str
    beneficiary: str
    dst_token: str
    chain_id: int
    amount: str


class CctxValidWithdrawal(NamedTuple):
    orig_chain_id: int
    orig_timestamp: int
    orig_tx_hash: str
    dst_chain_id: int
    dst_timestamp: int
    dst_tx_hash: str
    withdrawal_id: str
    orig_token: str
    dst_token: str
    sender: str
    beneficiary: str
    amount: str


RULE_NAMES = {
    1: "SC_ValidNativeTokenDeposit",
    2: "SC_ValidERC20TokenDeposit",
    3: "TC_ValidERC20TokenDeposit",
    4: "CCTX_ValidDeposit",
    5: "TC_ValidNativeTokenWithdrawal",
    6: "TC_ValidERC20TokenWithdrawal",
    7: "SC_ValidERC20TokenWithdrawal",
    8: "CCTX_ValidWithdrawal",
}


def _require_sealed(store: FactStore) -> None:
    if not store.sealed:
        raise RuntimeError("store must be sealed before evaluation")


def eval_rule1(store: FactStore) -> frozenset[ScValidNativeTokenDeposit]:
    """Native-token deposits on the source chain.

    A bridge deposit event must pair, within the same transaction, with a
    native value escrow into a bridge-controlled address, a successful
    transaction whose value equals the escrowed amount, a registered token
    mapping, and the source chain's wrapped-native token; the bridge event
    must come after the escrow.
    """
    _require_sealed(store)
    out = set()
    sc_deposit_by_tx = store.by_tx["sc_deposit"]
    for dep in store.relation("sc_token_deposited"):
        for esc in sc_deposit_by_tx.get(dep.tx_hash, ()):
            if esc.amount != dep.amount or dep.event_index <= esc.event_index:
                continue
            for tx in store.transactions_by_hash.get(dep.tx_hash, ()):
                if tx.status != 1 or tx.from_address != esc.sender or tx.value != dep.amount:
                    continue
                chain = tx.chain_id
                if (
                    (chain, dep.dst_chain_id, dep.orig_token, dep.dst_token, dep.standard)
                    not in store.token_mappings
                ):
                    continue
                if (chain, dep.orig_token) not in store.wrapped_native:
                    continue
                if (chain, esc.bridge_addr) not in store.bridge_addresses:
                    continue
                out.add(
                    ScValidNativeTokenDeposit(
                        tx.timestamp, dep.tx_hash, dep.deposit_id, esc.sender,
                        esc.bridge_addr, dep.beneficiary, dep.dst_token, dep.orig_token,
                        chain, dep.dst_chain_id, dep.standard, dep.amount,
                    )
                )
    return frozenset(out)


def eval_rule2(store: FactStore) -> frozenset[ScValidErc20TokenDeposit]:
    """ERC-20 deposits on the source chain: the escrow is a token transfer
    into a bridge-controlled address and the transaction moves no native
    value."""
    _require_sealed(store)
    out = set()
    transfers_by_tx = store.by_tx["erc20_transfer"]
    for dep in store.relation("sc_token_deposited"):
        for tr in transfers_by_tx.get(dep.tx_hash, ()):
            if (
                tr.token != dep.orig_token
                or tr.amount != dep.amount
                or dep.event_index <= tr.event_index
            ):
                continue
            if (tr.chain_id, tr.to_address) not in store.bridge_addresses:
                continue
            if (
                (tr.chain_id, dep.dst_chain_id, dep.orig_token, dep.dst_token, dep.standard)
                not in store.token_mappings
            ):
                continue
            for tx in store.transactions_by_hash.get(dep.tx_hash, ()):
                if tx.chain_id != tr.chain_id or tx.status != 1 or tx.value != "0":
                    continue
                out.add(
                    ScValidErc20TokenDeposit(
                        tx.timestamp, dep.tx_hash, dep.deposit_id, tx.from_address,
                        tr.to_address, dep.beneficiary, dep.dst_token, dep.orig_token,
                        tr.chain_id, dep.dst_chain_id, dep.standard, dep.amount,
                    )
                )
    return frozenset(out)


def eval_rule3(store: FactStore) -> frozenset[TcValidErc20TokenDeposit]:
    """Deposit releases on the target chain: a bridge deposit event paired
    with a token transfer from a bridge-controlled address to the
    beneficiary, inside a successful zero-value transaction."""
    _require_sealed(store)
    out = set()
    transfers_by_tx = store.by_tx["erc20_transfer"]
    for dep in store.relation("tc_token_deposited"):
        for tr in transfers_by_tx.get(dep.tx_hash, ()):
            if (
                tr.token != dep.dst_token
                or tr.to_address != dep.beneficiary
                or tr.amount != dep.amount
                or dep.event_index <= tr.event_index
            ):
                continue
            if (tr.chain_id, tr.from_address) not in store.bridge_addresses:
                continue
            for tx in store.transactions_by_hash.get(dep.tx_hash, ()):
                if tx.chain_id != tr.chain_id or tx.status != 1 or tx.value != "0":
                    continue
                out.add(
                    TcValidErc20TokenDeposit(
                        tx.timestamp, dep.tx_hash, dep.deposit_id, dep.beneficiary,
                        dep.dst_token, tr.chain_id, dep.amount,
                    )
                )
    return frozenset(out)


def _cctx_join(
    release_side: Iterable,
    escrow_side: Iterable,
    finality: dict[int, int],
    result_type,
):
    """Join local tuples on (id, beneficiary, dst_token, dst_chain, amount)
    and keep pairs strictly outside the origin chain's finality window."""
    by_key: dict[tuple, list] = {}
    for esc in escrow_side:
        key = (esc[2], esc.beneficiary, esc.dst_token, esc.dst_chain_id, esc.amount)
        by_key.setdefault(key, []).append(esc)
    out = set()
    for rel in release_side:
        key = (rel[2], rel.beneficiary, rel.dst_token, rel.chain_id, rel.amount)
        for esc in by_key.get(key, ()):
            window = finality.get(esc.orig_chain_id)
            if window is None:
                continue
            if esc.timestamp + window < rel.timestamp:
                out.add(
                    result_type(
                        esc.orig_chain_id, esc.timestamp, esc.tx_hash,
                        rel.chain_id, rel.timestamp, rel.tx_hash,
                        rel[2], esc.orig_token, esc.dst_token,
                        esc.sender, rel.beneficiary, rel.amount,
                    )
                )
    return frozenset(out)


def eval_rule4(
    store: FactStore,
    rule1: frozenset | None = None,
    rule2: frozenset | None = None,
    rule3: frozenset | None = None,
) -> frozenset[CctxValidDeposit]:
    """Cross-chain deposits: a target-chain release matching a source-chain
    escrow (native or ERC-20) on id, beneficiary, token, chain and amount,
    strictly after the source chain's finality window."""
    _require_sealed(store)
    r1 = eval_rule1(store) if rule1 is None else rule1
    r2 = eval_rule2(store) if rule2 is None else rule2
    r3 = eval_rule3(store) if rule3 is None else rule3
    return _cctx_join(r3, list(r1) + list(r2), store.finality, CctxValidDeposit)


def eval_rule5(store: FactStore) -> frozenset[TcValidNativeTokenWithdrawal]:
    """Native-token withdrawal escrows on the target chain (inverse of the
    native deposit rule, with the token mapping looked up in the deposit
    direction)."""
    _require_sealed(store)
    out = set()
    escrow_by_tx = store.by_tx["tc_withdrawal"]
    for wdr in store.relation("tc_token_withdrew"):
        for esc in escrow_by_tx.get(wdr.tx_hash, ()):
            if esc.amount != wdr.amount or wdr.event_index <= esc.event_index:
                continue
            for tx in store.transactions_by_hash.get(wdr.tx_hash, ()):
                if tx.status != 1 or tx.from_address != esc.sender or tx.value != wdr.amount:
                    continue
                chain = tx.chain_id
                if (
                    (wdr.dst_chain_id, chain, wdr.dst_token, wdr.orig_token, wdr.standard)
                    not in store.token_mappings
                ):
                    continue
                if (chain, wdr.orig_token) not in store.wrapped_native:
                    continue
                if (chain, esc.bridge_addr) not in store.bridge_addresses:
                    continue
                out.add(
                    TcValidNativeTokenWithdrawal(
                        tx.timestamp, wdr.tx_hash, wdr.withdrawal_id, esc.sender,
                        esc.bridge_addr, wdr.beneficiary, wdr.orig_token, wdr.dst_token,
                        wdr.dst_chain_id, chain, wdr.standard, wdr.amount,
                    )
                )
    return frozenset(out)


def eval_rule6(store: FactStore) -> frozenset[TcValidErc20TokenWithdrawal]:
    """ERC-20 withdrawal escrows on the target chain."""
    _require_sealed(store)
    out = set()
    transfers_by_tx = store.by_tx["erc20_transfer"]
    for wdr in store.relation("tc_token_withdrew"):
        for tr in transfers_by_tx.get(wdr.tx_hash, ()):
            if (
                tr.token != wdr.orig_token
                or tr.amount != wdr.amount
                or wdr.event_index <= tr.event_index
            ):
                continue
            if (tr.chain_id, tr.to_address) not in store.bridge_addresses:
                continue
            if (
                (wdr.dst_chain_id, tr.chain_id, wdr.dst_token, wdr.orig_token, wdr.standard)
                not in store.token_mappings
            ):
                continue
            for tx in store.transactions_by_hash.get(wdr.tx_hash, ()):
                if tx.chain_id != tr.chain_id or tx.status != 1 or tx.value != "0":
                    continue
                out.add(
                    TcValidErc20TokenWithdrawal(
                        tx.timestamp, wdr.tx_hash, wdr.withdrawal_id, tx.from_address,
                        tr.to_address, wdr.beneficiary, wdr.orig_token, wdr.dst_token,
                        wdr.dst_chain_id, tr.chain_id, wdr.standard, wdr.amount,
                    )
                )
    return frozenset(out)


def eval_rule7(store: FactStore) -> frozenset[ScValidErc20TokenWithdrawal]:
    """Withdrawal releases on the source chain.

    The release is either a token transfer from a bridge-controlled
    address to the beneficiary or a native value release recorded by the
    bridge; the enclosing transaction succeeds with zero value. Unlike the
    escrow rules there is no token-mapping conjunct.
    """
    _require_sealed(store)
    out = set()
    transfers_by_tx = store.by_tx["erc20_transfer"]
    native_by_tx = store.by_tx["sc_withdrawal"]
    for wdr in store.relation("sc_token_withdrew"):
        releases = []
        for tr in transfers_by_tx.get(wdr.tx_hash, ()):
            if (
                tr.token == wdr.dst_token
                and tr.to_address == wdr.beneficiary
                and tr.amount == wdr.amount
                and wdr.event_index > tr.event_index
            ):
                releases.append((tr.chain_id, tr.from_address))
        for nat in native_by_tx.get(wdr.tx_hash, ()):
            if (
                nat.beneficiary == wdr.beneficiary
                and nat.amount == wdr.amount
                and wdr.event_index > nat.event_index
            ):
                releases.append((None, nat.bridge_addr))
        if not releases:
            continue
        for tx in store.transactions_by_hash.get(wdr.tx_hash, ()):
            if tx.status != 1 or tx.value != "0":
                continue
            for rel_chain, bridge_addr in releases:
                if rel_chain is not None and rel_chain != tx.chain_id:
                    continue
                if (tx.chain_id, bridge_addr) not in store.bridge_addresses:
                    continue
                out.add(
                    ScValidErc20TokenWithdrawal(
                        tx.timestamp, wdr.tx_hash, wdr.withdrawal_id, wdr.beneficiary,
                        wdr.dst_token, tx.chain_id, wdr.amount,
                    )
                )
    return frozenset(out)


def eval_rule8(
    store: FactStore,
    rule5: frozenset | None = None,
    rule6: frozenset | None = None,
    rule7: frozenset | None = None,
) -> frozenset[CctxValidWithdrawal]:
    """Cross-chain withdrawals: a source-chain release matching a
    target-chain escrow, strictly after the target chain's finality
    window."""
    _require_sealed(store)
    r5 = eval_rule5(store) if rule5 is None else rule5
    r6 = eval_rule6(store) if rule6 is None else rule6
    r7 = eval_rule7(store) if rule7 is None else rule7
    return _cctx_join(r7, list(r5) + list(r6), store.finality, CctxValidWithdrawal)


@dataclass(frozen=True)
class RuleOutputs:
    """All eight rule outputs for one store."""

    rule1: frozenset[ScValidNativeTokenDeposit]
    rule2: frozenset[ScValidErc20TokenDeposit]
    rule3: frozenset[TcValidErc20TokenDeposit]
    rule4: frozenset[CctxValidDeposit]
    rule5: frozenset[TcValidNativeTokenWithdrawal]
    rule6: frozenset[TcValidErc20TokenWithdrawal]
    rule7: frozenset[ScValidErc20TokenWithdrawal]
    rule8: frozenset[CctxValidWithdrawal]

    def by_rule(self) -> dict[int, frozenset]:
        return {i: getattr(self, f"rule{i}") for i in range(1, 9)}

    def counts(self) -> dict[str, int]:
        return {RULE_NAMES[i]: len(s) for i, s in self.by_rule().items()}


def eval_all(store: FactStore) -> RuleOutputs:
    """Evaluate all eight rules.

    Raises :class:`ConfigurationError` if any chain referenced by the
    store's facts has no finality window.
    """
    _require_sealed(store)
    missing = sorted(store.chain_ids() - set(store.finality))
    if missing:
        raise ConfigurationError(
            f"no cctx_finality fact for chain(s): {', '.join(map(str, missing))}"
        )
    r1 = eval_rule1(store)
    r2 = eval_rule2(store)
    r3 = eval_rule3(store)
    r5 = eval_rule5(store)
    r6 = eval_rule6(store)
    r7 = eval_rule7(store)
    return RuleOutputs(
        rule1=r1,
        rule2=r2,
        rule3=r3,
        rule4=eval_rule4(store, r1, r2, r3),
        rule5=r5,
        rule6=r6,
        rule7=r7,
        rule8=eval_rule8(store, r5, r6, r7),
    )


def write_rule_outputs_csv(outputs: RuleOutputs, path: str | Path) -> list[Path]:
    """Write one ``<RuleName>.csv`` per rule (header row, rows sorted) for
    diffing against an external Datalog engine run on the same facts."""
    root = Path(path)
    root.mkdir(parents=True, exist_ok=True)
    written = []
    for rule_id, tuples in outputs.by_rule().items():
        file_path = root / f"{RULE_NAMES[rule_id]}.csv"
        tuple_type = {
            1: ScValidNativeTokenDeposit,
            2: ScValidErc20TokenDeposit,
            3: TcValidErc20TokenDeposit,
            4: CctxValidDeposit,
            5: TcValidNativeTokenWithdrawal,
            6: TcValidErc20TokenWithdrawal,
            7: ScValidErc20TokenWithdrawal,
            8: CctxValidWithdrawal,
        }[rule_id]
        with open(file_path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(tuple_type._fields)
            for row in sorted(tuples):
                writer.writerow(row)
        written.append(file_path)
    return written
