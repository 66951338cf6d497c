"""Fact encodings, store set semantics, and TSV persistence."""

from __future__ import annotations

import pytest
from hypothesis import given, strategies as st

from bridgewatch import facts as f
from conftest import AA, B1, CC, H1, U1, build_store, f1_facts, f2_facts, static_facts


class TestCanonicalization:
    def test_address_lowercased(self):
        mixed = "0x" + "AbCdEf" + "0" * 34
        assert f.canonical_address(mixed) == mixed.lower()

    def test_address_rejects_bad_hex(self):
        with pytest.raises(f.EncodingError):
            f.canonical_address("0x" + "zz" * 20)

    def test_address_rejects_wrong_length(self):
        with pytest.raises(f.EncodingError):
            f.canonical_address("0x" + "ab" * 19)

    def test_tx_hash(self):
        assert f.canonical_tx_hash(H1.upper().replace("0X", "0x")) == H1

    def test_amount_rejects_leading_zero(self):
        with pytest.raises(f.EncodingError):
            f.canonical_amount("007")

    def test_amount_rejects_overflow(self):
        with pytest.raises(f.EncodingError):
            f.canonical_amount(str(2**256))

    def test_amount_zero(self):
        assert f.canonical_amount("0") == "0"
        assert f.canonical_amount(0) == "0"

    @given(st.integers(min_value=0, max_value=2**256 - 1))
    def test_amount_round_trips(self, value):
        encoded = f.canonical_amount(value)
        assert int(encoded) == value
        assert f.canonical_amount(encoded) == encoded

    @given(st.binary(min_size=20, max_size=20))
    def test_address_canonicalization_fixed_point(self, raw):
        mixed = "0x" + raw.hex().upper()
        once = f.canonical_address(mixed)
        assert f.canonical_address(once) == once


class TestFactValidation:
    def test_transaction_status_domain(self):
        with pytest.raises(f.EncodingError, match="status"):
            f.TransactionFact(1, 1, H1, 1, U1, B1, "5", 2, 21_000)

    def test_erc20_transfer_bad_token(self):
        with pytest.raises(f.EncodingError, match="token"):
            f.Erc20TransferFact(H1, 1, 0, "0x" + "ZZ" * 20, U1, B1, "5")

    def test_chain_id_nonzero(self):
        with pytest.raises(f.EncodingError, match="chain_id"):
            f.CctxFinalityFact(0, 10)

    def test_finality_positive(self):
        with pytest.raises(f.EncodingError, match="finality_seconds"):
            f.CctxFinalityFact(1, 0)

    def test_opaque_field_rejects_tab(self):
        with pytest.raises(f.EncodingError, match="deposit_id"):
            f.ScTokenDepositedFact(H1, 1, "a\tb", U1, AA, CC, 100, "ERC20", "5")

    def test_fields_are_canonicalized_on_construction(self):
        fact = f.ScDepositFact(H1.upper().replace("0X", "0x"), 0, U1.upper().replace("0X", "0x"), B1, "5")
        assert fact.tx_hash == H1
        assert fact.sender == U1


class TestStore:
    def test_insert_idempotent(self):
        store = f.FactStore()
        store.insert(f.CctxFinalityFact(1, 1800))
        store.insert(f.CctxFinalityFact(1, 1800))
        assert store.count("cctx_finality") == 1

    def test_conflicting_finality_rejected(self):
        store = f.FactStore()
        store.insert(f.CctxFinalityFact(1, 1800))
        with pytest.raises(f.FactStoreError, match="conflicting"):
            store.insert(f.CctxFinalityFact(1, 900))

    def test_insert_after_seal_rejected(self):
        store = f.FactStore()
        store.seal()
        with pytest.raises(f.FactStoreError):
            store.insert(f.CctxFinalityFact(1, 1800))

    def test_permuting_insertion_order_gives_equal_store(self):
        all_facts = static_facts() + f1_facts() + f2_facts()
        forward = f.FactStore()
        forward.insert_all(all_facts)
        backward = f.FactStore()
        backward.insert_all(reversed(all_facts))
        assert forward == backward

    @given(st.permutations(range(len(static_facts() + f1_facts()))))
    def test_any_permutation_equal(self, order):
        all_facts = static_facts() + f1_facts()
        store = f.FactStore()
        store.insert_all(all_facts[i] for i in order)
        reference = f.FactStore()
        reference.insert_all(all_facts)
        assert store == reference

    def test_chain_ids_collects_references(self):
        store = build_store(static_facts(), f1_facts())
        assert store.chain_ids() == {1, 100}


class TestPersistence:
    def test_load_single_line(self, tmp_path):
        (tmp_path / "cctx_finality.facts").write_text("1\t1800\n")
        store = f.load_facts_dir(tmp_path)
        assert store.relation("cctx_finality") == {f.CctxFinalityFact(1, 1800)}

    def test_empty_directory(self, tmp_path):
        store = f.load_facts_dir(tmp_path)
        assert store.total_facts() == 0

    def test_wrong_column_count_names_file_and_line(self, tmp_path):
        lines = "\t".join([H1, "1", "7", U1, AA, CC, "100", "ERC20"])  # 8 cols, schema has 9
        (tmp_path / "sc_token_deposited.facts").write_text(lines + "\n")
        with pytest.raises(f.FactsParseError, match=r"sc_token_deposited\.facts:1"):
            f.load_facts_dir(tmp_path)

    def test_round_trip_identity(self, tmp_path):
        store = build_store(static_facts(), f1_facts(), f2_facts())
        f.dump_facts_dir(store, tmp_path)
        assert f.load_facts_dir(tmp_path) == store

    def test_load_dump_reproduces_canonical_files(self, tmp_path):
        first = tmp_path / "first"
        second = tmp_path / "second"
        f.dump_facts_dir(build_store(static_facts(), f1_facts()), first)
        f.dump_facts_dir(f.load_facts_dir(first), second)
        names = sorted(p.name for p in first.glob("*.facts"))
        assert names == sorted(p.name for p in second.glob("*.facts"))
        for name in names:
            assert (first / name).read_bytes() == (second / name).read_bytes()

    def test_two_relations_two_files(self, tmp_path):
        store = build_store([f.CctxFinalityFact(1, 10), f.WrappedNativeTokenFact(1, AA)])
        written = f.dump_facts_dir(store, tmp_path)
        assert len(written) == 2
        assert sorted(p.name for p in written) == [
            "cctx_finality.facts",
            "wrapped_native_token.facts",
        ]

    def test_rows_sorted_lexicographically(self, tmp_path):
        store = f.FactStore()
        store.insert(f.WrappedNativeTokenFact(2, "0x" + "b" * 40))
        store.insert(f.WrappedNativeTokenFact(1, "0x" + "a" * 40))
        f.dump_facts_dir(store, tmp_path)
        lines = (tmp_path / "wrapped_native_token.facts").read_text().splitlines()
        assert lines == sorted(lines)

    def test_missing_directory(self):
        with pytest.raises(FileNotFoundError):
            f.load_facts_dir("/nonexistent/path/for/facts")

    def test_load_rejects_malformed_field(self, tmp_path):
        (tmp_path / "cctx_finality.facts").write_text("0\t1800\n")
        with pytest.raises(f.FactsParseError, match="chain id"):
            f.load_facts_dir(tmp_path)
