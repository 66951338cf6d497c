"""Generator determinism, parameter validation, and detector agreement."""

from __future__ import annotations

import json

import pytest

from bridgewatch import analytics
from bridgewatch.facts import load_facts_dir
from bridgewatch.ingest import BridgeDecoderConfig, ingest_jsonl
from bridgewatch.rules import eval_all
from bridgewatch.scenario import (
    AnomalySpec,
    ParameterError,
    ScenarioParams,
    SplitMix64,
    describe,
    generate,
)


class TestSplitMix64:
    def test_known_sequence_is_stable(self):
        rng = SplitMix64(0)
        first = [rng.next_u64() for _ in range(3)]
        rng2 = SplitMix64(0)
        assert first == [rng2.next_u64() for _ in range(3)]

    def test_different_seeds_differ(self):
        assert SplitMix64(1).next_u64() != SplitMix64(2).next_u64()

    def test_randint_bounds(self):
        rng = SplitMix64(9)
        draws = [rng.randint(3, 7) for _ in range(200)]
        assert min(draws) >= 3 and max(draws) <= 7
        assert set(draws) == {3, 4, 5, 6, 7}

    def test_sample_indexes_distinct(self):
        rng = SplitMix64(5)
        sample = rng.sample_indexes(50, 10)
        assert len(set(sample)) == 10

    def test_address_is_canonical(self):
        addr = SplitMix64(1).address()
        assert addr.startswith("0x") and len(addr) == 42


class TestValidation:
    def test_negative_counts_rejected(self):
        with pytest.raises(ParameterError):
            ScenarioParams(seed=1, n_deposits=-1, n_withdrawals=0).validate()

    def test_finality_break_needs_window(self):
        from bridgewatch.scenario import ChainSpec

        params = ScenarioParams(
            seed=1, n_deposits=2, n_withdrawals=0,
            source=ChainSpec(1, 1, 12),
            anomalies=AnomalySpec(finality_break=1),
        )
        with pytest.raises(ParameterError, match="window"):
            params.validate()

    def test_anomaly_counts_bounded_by_base_flows(self):
        params = ScenarioParams(
            seed=1, n_deposits=2, n_withdrawals=1,
            anomalies=AnomalySpec(replayed_id=2),
        )
        with pytest.raises(ParameterError, match="replayed_id"):
            params.validate()

    def test_fanout_minimum(self):
        params = ScenarioParams(
            seed=1, n_deposits=0, n_withdrawals=2,
            anomalies=AnomalySpec(replayed_id=1, replay_fanout=1),
        )
        with pytest.raises(ParameterError, match="fanout"):
            params.validate()

    def test_spec_string_parsing(self):
        spec = AnomalySpec.from_spec_string("forged_release=2,finality_break=1")
        assert spec.forged_release == 2 and spec.finality_break == 1
        assert AnomalySpec.from_spec_string("") == AnomalySpec()
        with pytest.raises(ParameterError):
            AnomalySpec.from_spec_string("nonsense=1")


class TestDescribe:
    def test_clean_counts(self):
        d = describe(ScenarioParams(seed=1, n_deposits=10, n_withdrawals=5))
        assert d["rule_counts"]["CCTX_ValidDeposit"] == 10
        assert d["rule_counts"]["CCTX_ValidWithdrawal"] == 5
        assert d["anomaly_counts"] == {}

    def test_replay_adds_release_tuples(self):
        params = ScenarioParams(
            seed=1, n_deposits=0, n_withdrawals=4,
            anomalies=AnomalySpec(replayed_id=2, replay_fanout=3),
        )
        d = describe(params)
        assert d["anomaly_counts"]["DuplicateId"] == 2
        # 2 replayed ids continue 2 extra releases each
        assert d["rule_counts"]["SC_ValidERC20TokenWithdrawal"] == 4 + 2 * (3 - 1)
        assert d["rule_counts"]["CCTX_ValidWithdrawal"] == 4 + 2 * (3 - 1)

    def test_all_zero(self):
        d = describe(ScenarioParams(seed=1, n_deposits=0, n_withdrawals=0))
        assert all(v == 0 for v in d["rule_counts"].values())
        assert d["anomaly_counts"] == {}


class TestGeneration:
    def test_clean_scenario_matches_describe(self):
        params = ScenarioParams(seed=42, n_deposits=10, n_withdrawals=7)
        scenario = generate(params)
        outputs = eval_all(scenario.store)
        assert outputs.counts() == describe(params)["rule_counts"]
        report = analytics.build_report(scenario.store, outputs)
        assert analytics.total_anomalies(report) == 0
        assert scenario.ground_truth == []

    def test_determinism_byte_identical_dumps(self, tmp_path):
        params = ScenarioParams(
            seed=77, n_deposits=6, n_withdrawals=6,
            anomalies=AnomalySpec(forged_release=1, replayed_id=1),
        )
        generate(params).write_facts_dir(tmp_path / "a")
        generate(params).write_facts_dir(tmp_path / "b")
        files_a = sorted((tmp_path / "a").glob("*.facts"))
        files_b = sorted((tmp_path / "b").glob("*.facts"))
        assert [p.name for p in files_a] == [p.name for p in files_b]
        for pa, pb in zip(files_a, files_b):
            assert pa.read_bytes() == pb.read_bytes()

    def test_different_seeds_differ(self):
        a = generate(ScenarioParams(seed=1, n_deposits=3, n_withdrawals=0))
        b = generate(ScenarioParams(seed=2, n_deposits=3, n_withdrawals=0))
        assert a.store != b.store

    def test_ground_truth_bijection(self):
        params = ScenarioParams(
            seed=9, n_deposits=8, n_withdrawals=8,
            anomalies=AnomalySpec(
                forged_release=2, replayed_id=2, finality_break=2,
                direct_transfer=2, orphan_bridge_event=2,
            ),
        )
        scenario = generate(params)
        by_kind = {}
        for entry in scenario.ground_truth:
            by_kind[entry["kind"]] = by_kind.get(entry["kind"], 0) + 1
        assert by_kind == {kind: 2 for kind in (
            "forged_release", "replayed_id", "finality_break",
            "direct_transfer", "orphan_bridge_event",
        )}

    def test_every_injected_anomaly_detected_with_expected_kind(self):
        params = ScenarioParams(
            seed=31, n_deposits=10, n_withdrawals=10,
            anomalies=AnomalySpec(
                forged_release=3, replayed_id=2, finality_break=2,
                direct_transfer=1, orphan_bridge_event=1,
            ),
        )
        scenario = generate(params)
        outputs = eval_all(scenario.store)
        report = analytics.build_report(scenario.store, outputs)
        assert report["anomaly_counts"] == describe(params)["anomaly_counts"]
        reported = {
            (kind, tuple(item["tx_hashes"]))
            for kind, items in report["anomalies"].items()
            for item in items
        }
        for entry in scenario.ground_truth:
            expected = (entry["expected_anomaly"], tuple(entry["tx_hashes"]))
            assert expected in reported, f"missed {entry}"

    def test_receipts_ingest_reproduces_store(self, tmp_path):
        params = ScenarioParams(
            seed=58, n_deposits=5, n_withdrawals=6,
            anomalies=AnomalySpec(replayed_id=1, finality_break=1),
        )
        scenario = generate(params)
        receipts_path = tmp_path / "receipts.jsonl"
        scenario.write_receipts_jsonl(receipts_path)
        config = BridgeDecoderConfig.from_json(scenario.config)
        store, report = ingest_jsonl(receipts_path, config)
        assert report.warnings == []
        assert store == scenario.store

    def test_facts_dir_round_trip(self, tmp_path):
        scenario = generate(ScenarioParams(seed=4, n_deposits=4, n_withdrawals=4))
        scenario.write_facts_dir(tmp_path)
        assert load_facts_dir(tmp_path) == scenario.store

    def test_timestamps_monotone_per_chain(self):
        scenario = generate(ScenarioParams(seed=12, n_deposits=20, n_withdrawals=20))
        per_chain: dict[int, list[tuple[int, int]]] = {}
        for tx in scenario.store.relation("transaction"):
            per_chain.setdefault(tx.chain_id, []).append((tx.block_number, tx.timestamp))
        for pairs in per_chain.values():
            pairs.sort()
            timestamps = [ts for _, ts in pairs]
            assert timestamps == sorted(timestamps)
            blocks = [b for b, _ in pairs]
            assert blocks == list(range(1, len(blocks) + 1))

    def test_ground_truth_json_is_deterministic(self, tmp_path):
        params = ScenarioParams(
            seed=66, n_deposits=3, n_withdrawals=3,
            anomalies=AnomalySpec(forged_release=1),
        )
        generate(params).write_ground_truth(tmp_path / "a.json")
        generate(params).write_ground_truth(tmp_path / "b.json")
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        entries = json.loads((tmp_path / "a.json").read_text())
        assert entries[0]["expected_anomaly"] == "UnmatchedLocalWithdrawal"
