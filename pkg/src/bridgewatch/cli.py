"""Command-line surface for the monitoring pipeline.

Subcommands: ``ingest`` decodes receipts into a facts directory, ``eval``
runs the rules plus analytics over a facts directory, ``simulate``
generates synthetic scenarios, ``check`` diffs the hash-join engine
against the brute-force evaluator, and ``stats`` prints latency/value
statistics. Machine-readable output goes to stdout or files; progress and
diagnostics go to stderr.

Exit codes: 0 clean, 1 anomalies found, 2 input/config error, 3 internal
error.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import analytics
from .facts import FactsParseError, FactStoreError, dump_facts_dir, load_facts_dir
from .ingest import ConfigError, IngestError, ingest_jsonl, load_config
from .oracle import OracleSizeError, brute_force
from .rules import RULE_NAMES, ConfigurationError, eval_all
from .scenario import AnomalySpec, ParameterError, ScenarioParams, generate

EXIT_CLEAN = 0
EXIT_ANOMALIES = 1
EXIT_INPUT_ERROR = 2
EXIT_INTERNAL = 3


def _progress(message: str) -> None:
    print(message, file=sys.stderr)


def _load_prices(path: str | None) -> analytics.PriceTable | None:
    if path is None:
        return None
    with open(path, encoding="utf-8") as fh:
        entries = json.load(fh)
    table: dict[tuple[int, str], tuple[str, int]] = {}
    for entry in entries:
        table[(int(entry["chain_id"]), entry["token"].lower())] = (
            str(entry["usd_per_unit"]),
            int(entry["decimals"]),
        )
    return table


def cmd_ingest(args: argparse.Namespace) -> int:
    config = load_config(args.config)
    store, report = ingest_jsonl(args.receipts, config)
    out_dir = Path(args.out)
    dump_facts_dir(store, out_dir)
    _progress(
        f"ingested {report.receipts} receipts -> {store.total_facts()} facts "
        f"({len(report.warnings)} warnings) in {out_dir}"
    )
    print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    return EXIT_CLEAN


def cmd_eval(args: argparse.Namespace) -> int:
    store = load_facts_dir(args.facts).seal()
    outputs = eval_all(store)
    prices = _load_prices(args.prices)
    report = analytics.build_report(store, outputs, prices=prices)
    rendered = analytics.report_to_json(report)
    Path(args.out).write_text(rendered, encoding="utf-8")
    n_anomalies = analytics.total_anomalies(report)
    _progress(
        f"evaluated {store.total_facts()} facts: "
        + ", ".join(f"{name}={count}" for name, count in report["rule_counts"].items())
    )
    _progress(f"anomalies: {n_anomalies} -> {args.out}")
    return EXIT_ANOMALIES if n_anomalies else EXIT_CLEAN


def cmd_simulate(args: argparse.Namespace) -> int:
    anomalies = AnomalySpec.from_spec_string(args.anomalies)
    if args.replay_fanout is not None:
        anomalies = AnomalySpec(
            forged_release=anomalies.forged_release,
            replayed_id=anomalies.replayed_id,
            finality_break=anomalies.finality_break,
            direct_transfer=anomalies.direct_transfer,
            orphan_bridge_event=anomalies.orphan_bridge_event,
            replay_fanout=args.replay_fanout,
        )
    params = ScenarioParams(
        seed=args.seed,
        n_deposits=args.deposits,
        n_withdrawals=args.withdrawals,
        anomalies=anomalies,
    )
    scenario = generate(params)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    scenario.write_ground_truth(out_dir / "ground_truth.json")
    if args.emit == "facts":
        scenario.write_facts_dir(out_dir)
        _progress(f"wrote {scenario.store.total_facts()} facts to {out_dir}")
    else:
        scenario.write_receipts_jsonl(out_dir / "receipts.jsonl")
        scenario.write_config(out_dir / "decoder_config.json")
        _progress(f"wrote receipts + decoder config to {out_dir}")
    return EXIT_CLEAN


def cmd_check(args: argparse.Namespace) -> int:
    store = load_facts_dir(args.facts).seal()
    outputs = eval_all(store)
    diffs = []
    for rule_id, engine_set in outputs.by_rule().items():
        oracle_set = brute_force(rule_id, store)
        if engine_set != oracle_set:
            for tup in sorted(oracle_set - engine_set):
                diffs.append(f"{RULE_NAMES[rule_id]}: engine missing {tup}")
            for tup in sorted(engine_set - oracle_set):
                diffs.append(f"{RULE_NAMES[rule_id]}: engine extra {tup}")
    if diffs:
        for line in diffs:
            print(line)
        _progress(f"{len(diffs)} differences between engine and reference evaluator")
        return EXIT_INTERNAL
    _progress("engine output matches the reference evaluator on all 8 rules")
    return EXIT_CLEAN


def cmd_stats(args: argparse.Namespace) -> int:
    store = load_facts_dir(args.facts).seal()
    outputs = eval_all(store)
    prices = _load_prices(args.prices)
    stats = {
        "deposits": analytics.latency_stats(outputs.rule4, prices).as_dict(),
        "withdrawals": analytics.latency_stats(outputs.rule8, prices).as_dict(),
    }
    print(json.dumps(stats, indent=2, sort_keys=True))
    return EXIT_CLEAN


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bridgewatch",
        description="Cross-chain bridge monitoring: decode, evaluate, detect.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="decode receipts JSONL into a facts directory")
    p.add_argument("--receipts", required=True, help="receipts JSONL file")
    p.add_argument("--config", required=True, help="decoder config JSON")
    p.add_argument("--out", required=True, help="output facts directory")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("eval", help="evaluate rules and analytics over a facts directory")
    p.add_argument("--facts", required=True, help="facts directory")
    p.add_argument("--out", required=True, help="report JSON output path")
    p.add_argument("--prices", help="optional static price table JSON")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("simulate", help="generate a synthetic two-chain scenario")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--deposits", type=int, required=True)
    p.add_argument("--withdrawals", type=int, required=True)
    p.add_argument("--anomalies", default="", help="kind=count[,kind=count...]")
    p.add_argument("--replay-fanout", type=int, default=None,
                   help="releases per replayed id (default 3)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--emit", choices=("facts", "receipts"), default="facts")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("check", help="diff the engine against the brute-force evaluator")
    p.add_argument("--facts", required=True, help="facts directory")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("stats", help="print latency/value statistics")
    p.add_argument("--facts", required=True, help="facts directory")
    p.add_argument("--prices", help="optional static price table JSON")
    p.set_defaults(func=cmd_stats)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        FileNotFoundError,
        FactsParseError,
        FactStoreError,
        IngestError,
        ConfigError,
        ConfigurationError,
        ParameterError,
        OracleSizeError,
        json.JSONDecodeError,
    ) as exc:
        _progress(f"error: {exc}")
        return EXIT_INPUT_ERROR
    except Exception as exc:  # pragma: no cover - defensive
        _progress(f"internal error: {exc.__class__.__name__}: {exc}")
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
