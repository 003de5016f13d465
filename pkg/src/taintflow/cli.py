"""Command line entry point.

Subcommands: ingest-check, profile, taint, controls, compare, synth.
Exit codes: 0 success, 1 runtime error, 2 usage error. TAINTFLOW_OUT
overrides the output directory when --out is not given.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

from . import __version__
from .chain import ChainView
from .controls import criteria_for_theft, select_controls
from .engine import (DAY_SECONDS, PropagationPolicy, STRATEGIES, TaintLedger,
                     TaintSeed, first_distribution, propagate, write_ledger)
from .errors import EmptyWindow, TaintflowError
from .ingest import export_dataset, load_dataset, load_dataset_with_report
from .metrics import MetricsReport, compute_metrics, evaluate_hypotheses, overlap_sets
from .profiling import classify_service_addresses, profile_addresses
from . import report as rpt
from .synthgen import ScenarioSpec, TheftSpec, generate, write_truth


@dataclass
class RunConfig:
    chain_path: str
    seed_txid: str
    seed_vouts: tuple[int, ...] | None
    strategies: tuple[str, ...]
    window_days: int = 15
    percentile: float = 0.99
    service_halt: bool = True
    time_radius_days: int = 30
    value_radius_sat: int = 100_000_000_000
    shape_mode: str = "exact"
    consistent_at: float = 0.75
    inconsistent_at: float = 0.25
    out_dir: str = "."

    def params(self) -> dict:
        return {
            "taintflow_version": __version__,
            "chain": self.chain_path,
            "seed_txid": self.seed_txid,
            "seed_vouts": "all" if self.seed_vouts is None else
            ",".join(str(v) for v in self.seed_vouts),
            "strategies": ",".join(self.strategies),
            "window_days": self.window_days,
            "percentile": self.percentile,
            "service_halt": self.service_halt,
        }


@dataclass
class CaseResult:
    ledgers: dict[str, TaintLedger]
    reports: dict[str, MetricsReport]
    service_threshold: int | None
    service_set: frozenset[str]


def run_case(chain: ChainView, seed: TaintSeed, config: RunConfig) -> CaseResult:
    """Classify services on the seed's window, then propagate and measure
    every configured strategy."""
    first = first_distribution(chain, seed)
    threshold = None
    service_set: frozenset[str] = frozenset()
    if first is not None:
        window = (first[0], first[0] + config.window_days * DAY_SECONDS)
        try:
            threshold, service_set = classify_service_addresses(
                chain, window, config.percentile)
        except EmptyWindow:
            pass
    policy = PropagationPolicy(
        window_days=config.window_days,
        service_halt=config.service_halt,
        service_set=service_set)
    ledgers = {}
    reports = {}
    for strategy in config.strategies:
        ledger = propagate(chain, seed, strategy, policy)
        profiles = profile_addresses(chain, ledger, service_set)
        ledgers[strategy] = ledger
        reports[strategy] = compute_metrics(chain, ledger, profiles)
    return CaseResult(ledgers, reports, threshold, service_set)


def _config_from_args(args) -> RunConfig:
    out_dir = getattr(args, "out", None) or os.environ.get("TAINTFLOW_OUT") or "."
    return RunConfig(
        chain_path=args.chain,
        seed_txid=getattr(args, "seed", ""),
        seed_vouts=tuple(args.vouts) if getattr(args, "vouts", None) else None,
        strategies=tuple(args.strategies.split(",")),
        window_days=args.window_days,
        percentile=args.percentile,
        service_halt=not args.no_service_halt,
        time_radius_days=getattr(args, "time_radius_days", 30),
        value_radius_sat=getattr(args, "value_radius_sat", 100_000_000_000),
        shape_mode=getattr(args, "shape_mode", "exact"),
        consistent_at=getattr(args, "consistent_at", 0.75),
        inconsistent_at=getattr(args, "inconsistent_at", 0.25),
        out_dir=out_dir,
    )


def cmd_ingest_check(args) -> int:
    chain, report = load_dataset_with_report(args.chain, strict=False)
    print(f"transactions loaded: {len(chain)}")
    print(f"unknown fields ignored: {report.unknown_field_count}")
    if report.dropped:
        print(f"problems: {len(report.dropped)}")
        for line_no, reason in report.dropped[:50]:
            where = f"line {line_no}: " if line_no else ""
            print(f"  {where}{reason}")
        return 1
    print("problems: none")
    return 0


def cmd_profile(args) -> int:
    config = _config_from_args(args)
    chain = load_dataset(config.chain_path)
    seed = TaintSeed(config.seed_txid, config.seed_vouts)
    first = first_distribution(chain, seed)
    if first is None:
        print("seed outputs were never spent; nothing to profile", file=sys.stderr)
        return 1
    window = (first[0], first[0] + config.window_days * DAY_SECONDS)
    threshold, service_set = classify_service_addresses(
        chain, window, config.percentile)
    policy = PropagationPolicy(config.window_days, config.service_halt, service_set)
    ledger = propagate(chain, seed, args.strategy, policy)
    profiles = profile_addresses(chain, ledger, service_set)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = config.params()
    params["service_threshold"] = threshold
    params["strategy"] = args.strategy
    rpt.write_profiles(out / "profiles.tsv", params, profiles)
    print(f"service threshold: {threshold} (addresses above: {len(service_set)})")
    print(f"profiles written: {len(profiles)}")
    return 0


def cmd_taint(args) -> int:
    config = _config_from_args(args)
    chain = load_dataset(config.chain_path)
    seed = TaintSeed(config.seed_txid, config.seed_vouts)
    result = run_case(chain, seed, config)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = config.params()
    if result.service_threshold is not None:
        params["service_threshold"] = result.service_threshold
    for strategy, ledger in result.ledgers.items():
        write_ledger(ledger, out / f"ledger_{strategy}.txt")
    rpt.write_summary(out / "summary.tsv", params, result.reports)
    for strategy, report in result.reports.items():
        print(f"{strategy}: {report.tainted_tx_count} tainted txs, "
              f"{report.tainted_address_count} tainted addresses")
    return 0


def cmd_controls(args) -> int:
    config = _config_from_args(args)
    chain = load_dataset(config.chain_path)
    seed = TaintSeed(config.seed_txid, config.seed_vouts)
    policy_sets = run_case(chain, seed, RunConfig(
        chain_path=config.chain_path, seed_txid=config.seed_txid,
        seed_vouts=config.seed_vouts, strategies=("poison",),
        window_days=config.window_days, percentile=config.percentile,
        service_halt=config.service_halt))
    criteria = criteria_for_theft(
        chain, seed, policy_sets.ledgers["poison"],
        time_radius_days=config.time_radius_days,
        value_radius_sat=config.value_radius_sat,
        shape_mode=config.shape_mode)
    policy = PropagationPolicy(config.window_days, False, None)
    controls = select_controls(chain, seed, criteria, policy)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rpt.write_controls(out / "controls.txt", config.params(), criteria, controls)
    if not controls:
        print("warning: no control candidates matched", file=sys.stderr)
    print(f"controls selected: {len(controls)}")
    return 0


def cmd_compare(args) -> int:
    config = _config_from_args(args)
    chain = load_dataset(config.chain_path)
    seed = TaintSeed(config.seed_txid, config.seed_vouts)
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    params = config.params()

    theft = run_case(chain, seed, config)
    poison_ledger = theft.ledgers.get("poison")
    if poison_ledger is None:
        poison_cfg = replace(config, strategies=("poison",))
        poison_ledger = run_case(chain, seed, poison_cfg).ledgers["poison"]

    criteria = criteria_for_theft(
        chain, seed, poison_ledger,
        time_radius_days=config.time_radius_days,
        value_radius_sat=config.value_radius_sat,
        shape_mode=config.shape_mode)
    policy = PropagationPolicy(config.window_days, False, None)
    controls = select_controls(chain, seed, criteria, policy)
    if not controls:
        print("warning: no control candidates matched; "
              "hypothesis ranks unavailable", file=sys.stderr)

    control_results = {txid: run_case(chain, TaintSeed(txid), config)
                       for txid in controls}

    for strategy, ledger in theft.ledgers.items():
        write_ledger(ledger, out / f"ledger_{strategy}.txt")
    rpt.write_summary(out / "summary.tsv", params, theft.reports)
    rpt.write_day_series(out / "per_day_tx_counts.tsv", params, theft.reports,
                         "per_day_tx_counts")
    rpt.write_day_series(out / "fee_per_byte_per_day.tsv", params, theft.reports,
                         "fee_per_byte_series")
    rpt.write_address_types(out / "address_type_percentages.tsv", params,
                            theft.reports)
    rpt.write_addresses_per_tx(out / "addresses_per_tx.tsv", params, theft.reports)
    rpt.write_service_reach(out / "service_reach.tsv", params, theft.reports)
    if len(theft.ledgers) >= 2:
        rpt.write_overlaps(out / "overlaps.tsv", params,
                           overlap_sets(list(theft.ledgers.values())))
    rpt.write_controls(out / "controls.txt", params, criteria, controls)

    control_rows = []
    for txid in controls:
        for strategy, report in control_results[txid].reports.items():
            totals = report.totals()
            control_rows.append((txid, strategy, totals["tainted_tx"],
                                 totals["tainted_adr"], totals["avg_adr_per_tx"],
                                 totals["avg_tx_fee_value_sat"]))
    rpt.write_table(out / "controls_summary.tsv", params,
                    ["control_txid", "strategy", "tainted_tx", "tainted_adr",
                     "avg_adr_per_tx", "avg_tx_fee_value_sat"], control_rows)

    verdicts = {}
    if controls:
        for strategy in config.strategies:
            verdicts[strategy] = evaluate_hypotheses(
                theft.reports[strategy],
                [control_results[t].reports[strategy] for t in controls],
                consistent_at=config.consistent_at,
                inconsistent_at=config.inconsistent_at)
    rpt.write_hypotheses(out / "hypotheses.tsv", params, verdicts)
    rpt.write_notes(out / "notes.txt", params)

    print(f"controls: {len(controls)}; strategies: {', '.join(config.strategies)}")
    for strategy, items in verdicts.items():
        summary = ", ".join(f"{v.id}={v.verdict}" for v in items)
        print(f"{strategy}: {summary}")
    return 0


def cmd_synth(args) -> int:
    theft = None
    if args.theft_amount:
        theft = TheftSpec(amount_sat=args.theft_amount,
                          distribution_day=args.theft_day,
                          behavior=args.behavior)
    spec = ScenarioSpec(
        rng_seed=args.rng_seed,
        population=args.population,
        duration_days=args.duration_days,
        theft=theft,
        service_count=args.service_count,
        service_txs_per_day=args.service_txs_per_day,
        background_txs_per_day=args.background_txs_per_day,
        fee_band=(args.fee_low, args.fee_high),
    )
    chain, truth = generate(spec)
    export_dataset(chain, args.chain_out)
    if args.truth_out:
        write_truth(truth, args.truth_out)
    print(f"generated {len(chain)} transactions -> {args.chain_out}")
    if truth.theft_txid:
        print(f"theft txid: {truth.theft_txid}")
    return 0


def _strategies_type(value: str) -> str:
    for name in value.split(","):
        if name not in STRATEGIES:
            raise argparse.ArgumentTypeError(
                f"unknown strategy {name!r}; choose from {', '.join(STRATEGIES)}")
    return value


def _add_common(parser, with_seed=True):
    parser.add_argument("chain", help="chain dataset (taintflow-chain/1)")
    if with_seed:
        parser.add_argument("--seed", required=True, help="seed txid")
        parser.add_argument("--vouts", type=int, nargs="*",
                            help="seed output indices (default: all)")
    parser.add_argument("--strategies", type=_strategies_type,
                        default=",".join(STRATEGIES))
    parser.add_argument("--window-days", type=int, default=15)
    parser.add_argument("--percentile", type=float, default=0.99)
    parser.add_argument("--no-service-halt", action="store_true")
    parser.add_argument("--out", help="output directory (or $TAINTFLOW_OUT)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="taintflow",
        description="Taint propagation and theft-behaviour analytics "
                    "over UTXO transaction graphs")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest-check", help="load a dataset and report problems")
    p.add_argument("chain")
    p.set_defaults(func=cmd_ingest_check)

    p = sub.add_parser("profile", help="classify services and profile addresses")
    _add_common(p)
    p.add_argument("--strategy", default="poison", choices=STRATEGIES)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("taint", help="propagate strategies and write ledgers")
    _add_common(p)
    p.set_defaults(func=cmd_taint)

    p = sub.add_parser("controls", help="select control transactions")
    _add_common(p)
    p.add_argument("--time-radius-days", type=int, default=30)
    p.add_argument("--value-radius-sat", type=int, default=100_000_000_000)
    p.add_argument("--shape-mode", choices=("exact", "input-only"), default="exact")
    p.set_defaults(func=cmd_controls)

    p = sub.add_parser("compare", help="full theft-vs-controls comparison")
    _add_common(p)
    p.add_argument("--time-radius-days", type=int, default=30)
    p.add_argument("--value-radius-sat", type=int, default=100_000_000_000)
    p.add_argument("--shape-mode", choices=("exact", "input-only"), default="exact")
    p.add_argument("--consistent-at", type=float, default=0.75)
    p.add_argument("--inconsistent-at", type=float, default=0.25)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("synth", help="generate a synthetic scenario")
    p.add_argument("--rng-seed", type=int, default=1)
    p.add_argument("--population", type=int, default=20)
    p.add_argument("--duration-days", type=int, default=20)
    p.add_argument("--theft-amount", type=int, default=0)
    p.add_argument("--theft-day", type=int, default=1)
    p.add_argument("--behavior", default="fifo-consistent")
    p.add_argument("--service-count", type=int, default=2)
    p.add_argument("--service-txs-per-day", type=int, default=4)
    p.add_argument("--background-txs-per-day", type=int, default=None)
    p.add_argument("--fee-low", type=int, default=1)
    p.add_argument("--fee-high", type=int, default=5)
    p.add_argument("--chain-out", required=True)
    p.add_argument("--truth-out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except TaintflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
