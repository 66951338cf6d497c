"""Command-line surface: exit codes, flags, and pipe composition."""

from __future__ import annotations

import json

import pytest

from bridgewatch.cli import (
    EXIT_ANOMALIES,
    EXIT_CLEAN,
    EXIT_INPUT_ERROR,
    main,
)


def run(*argv) -> int:
    return main(list(argv))


class TestSimulateEval:
    def test_clean_scenario_exits_zero(self, tmp_path, capsys):
        facts = tmp_path / "facts"
        assert run("simulate", "--seed", "1", "--deposits", "5", "--withdrawals", "5",
                   "--out", str(facts)) == EXIT_CLEAN
        report_path = tmp_path / "report.json"
        assert run("eval", "--facts", str(facts), "--out", str(report_path)) == EXIT_CLEAN
        report = json.loads(report_path.read_text())
        assert report["rule_counts"]["CCTX_ValidDeposit"] == 5
        assert report["rule_counts"]["CCTX_ValidWithdrawal"] == 5

    def test_forged_release_exits_one_with_two_anomalies(self, tmp_path):
        facts = tmp_path / "facts"
        assert run("simulate", "--seed", "2", "--deposits", "5", "--withdrawals", "5",
                   "--anomalies", "forged_release=2", "--out", str(facts)) == EXIT_CLEAN
        report_path = tmp_path / "report.json"
        assert run("eval", "--facts", str(facts), "--out", str(report_path)) == EXIT_ANOMALIES
        report = json.loads(report_path.read_text())
        assert report["anomaly_counts"] == {"UnmatchedLocalWithdrawal": 2}

    def test_missing_facts_dir_exits_two(self, tmp_path):
        assert run("eval", "--facts", str(tmp_path / "nope"),
                   "--out", str(tmp_path / "r.json")) == EXIT_INPUT_ERROR

    def test_bad_anomaly_spec_exits_two(self, tmp_path):
        assert run("simulate", "--seed", "1", "--deposits", "1", "--withdrawals", "1",
                   "--anomalies", "bogus=3", "--out", str(tmp_path / "x")) == EXIT_INPUT_ERROR

    def test_bad_flag_exits_two(self, tmp_path):
        with pytest.raises(SystemExit) as excinfo:
            run("simulate", "--seed", "1", "--out", str(tmp_path / "x"))
        assert excinfo.value.code == 2


class TestCheck:
    def test_check_passes_on_generated_facts(self, tmp_path, capsys):
        facts = tmp_path / "facts"
        run("simulate", "--seed", "3", "--deposits", "4", "--withdrawals", "4",
            "--anomalies", "replayed_id=1,finality_break=1", "--out", str(facts))
        assert run("check", "--facts", str(facts)) == EXIT_CLEAN
        out = capsys.readouterr()
        assert "matches" in out.err


class TestStats:
    def test_stats_prints_both_directions(self, tmp_path, capsys):
        facts = tmp_path / "facts"
        run("simulate", "--seed", "4", "--deposits", "6", "--withdrawals", "3",
            "--out", str(facts))
        assert run("stats", "--facts", str(facts)) == EXIT_CLEAN
        payload = json.loads(capsys.readouterr().out)
        assert payload["deposits"]["count"] == 6
        assert payload["withdrawals"]["count"] == 3
        assert payload["deposits"]["min"] > 1800  # strictly outside the window


class TestPipeComposition:
    def test_receipts_path_equals_facts_path(self, tmp_path):
        sim_facts = tmp_path / "direct"
        sim_receipts = tmp_path / "rcpt"
        args = ["--seed", "11", "--deposits", "6", "--withdrawals", "6",
                "--anomalies", "forged_release=1,replayed_id=1"]
        assert run("simulate", *args, "--out", str(sim_facts), "--emit", "facts") == 0
        assert run("simulate", *args, "--out", str(sim_receipts), "--emit", "receipts") == 0

        ingested = tmp_path / "ingested"
        assert run("ingest", "--receipts", str(sim_receipts / "receipts.jsonl"),
                   "--config", str(sim_receipts / "decoder_config.json"),
                   "--out", str(ingested)) == EXIT_CLEAN

        report_a = tmp_path / "a.json"
        report_b = tmp_path / "b.json"
        assert run("eval", "--facts", str(sim_facts), "--out", str(report_a)) == EXIT_ANOMALIES
        assert run("eval", "--facts", str(ingested), "--out", str(report_b)) == EXIT_ANOMALIES
        assert report_a.read_bytes() == report_b.read_bytes()

    def test_ingest_report_on_stdout(self, tmp_path, capsys):
        sim = tmp_path / "sim"
        run("simulate", "--seed", "5", "--deposits", "2", "--withdrawals", "2",
            "--out", str(sim), "--emit", "receipts")
        out_dir = tmp_path / "facts"
        assert run("ingest", "--receipts", str(sim / "receipts.jsonl"),
                   "--config", str(sim / "decoder_config.json"),
                   "--out", str(out_dir)) == EXIT_CLEAN
        payload = json.loads(capsys.readouterr().out)
        assert payload["receipts"] == 8  # 2 txs per flow, 4 flows
        assert payload["warning_count"] == 0


class TestPrices:
    def test_eval_with_price_table(self, tmp_path):
        facts = tmp_path / "facts"
        run("simulate", "--seed", "6", "--deposits", "3", "--withdrawals", "0",
            "--out", str(facts))
        # price every deposited token at 2 usd per whole unit, 0 decimals
        tokens = set()
        for line in (facts / "sc_token_deposited.facts").read_text().splitlines():
            tokens.add(line.split("\t")[5])
        prices = [
            {"chain_id": 1, "token": token, "usd_per_unit": "2", "decimals": 0}
            for token in sorted(tokens)
        ]
        prices_path = tmp_path / "prices.json"
        prices_path.write_text(json.dumps(prices))
        report_path = tmp_path / "report.json"
        assert run("eval", "--facts", str(facts), "--out", str(report_path),
                   "--prices", str(prices_path)) == EXIT_CLEAN
        report = json.loads(report_path.read_text())
        deposits = report["latency"]["deposits"]
        assert deposits["total_usd"] == f"{int(deposits['total_value']) * 2}.00"
