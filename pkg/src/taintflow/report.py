"""Plot-ready report bundle writing.

Every file is tab-separated with a version line, sorted `# key=value`
parameter lines for provenance, and a fixed column order. Nothing
time-of-run dependent is written, so identical inputs produce
byte-identical bundles.
"""

from __future__ import annotations

from pathlib import Path

from .controls import ControlCriteria
from .metrics import (H1_DIRECTION_NOTE, HypothesisVerdict, MetricsReport)

REPORT_FORMAT = "taintflow-report/1"

SERVICE_REACH_NOTE = (
    "Service reaching is reported in three units (tainted outpoints, "
    "distinct service addresses, tainted value in sat); hypothesis H4 "
    "ranks the outpoint count."
)


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.6f}"
    return str(value)


def write_table(path, params: dict, columns: list[str], rows: list[tuple]) -> None:
    lines = [REPORT_FORMAT]
    for key in sorted(params):
        lines.append(f"# {key}={_fmt(params[key])}")
    lines.append("\t".join(columns))
    for row in rows:
        lines.append("\t".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def write_summary(path, params: dict, reports: dict[str, MetricsReport]) -> None:
    """One row per strategy with the overall tallies."""
    columns = ["strategy", "tainted_tx", "tainted_adr", "service_adr",
               "reused_adr", "fresh_adr", "avg_adr_per_tx", "avg_tx_fee_value_sat"]
    rows = []
    for strategy, report in reports.items():
        totals = report.totals()
        rows.append((strategy,) + tuple(totals[c] for c in columns[1:]))
    write_table(path, params, columns, rows)


def write_day_series(path, params: dict, reports: dict[str, MetricsReport],
                     field: str) -> None:
    strategies = list(reports)
    days = max((r.window_days for r in reports.values()), default=0)
    rows = []
    for day in range(days):
        row = [day + 1]
        for s in strategies:
            series = getattr(reports[s], field)
            row.append(series[day] if day < len(series) else 0)
        rows.append(tuple(row))
    write_table(path, params, ["day"] + strategies, rows)


def write_address_types(path, params: dict, reports: dict[str, MetricsReport]) -> None:
    rows = [(s, r.pct_service, r.pct_reused, r.pct_fresh)
            for s, r in reports.items()]
    write_table(path, params, ["strategy", "pct_service", "pct_reused", "pct_fresh"], rows)


def write_addresses_per_tx(path, params: dict, reports: dict[str, MetricsReport]) -> None:
    columns = ["strategy", "min", "q1", "median", "q3", "max", "mean"]
    rows = []
    for s, r in reports.items():
        stats = r.addresses_per_tx_stats
        rows.append((s,) + tuple(stats[c] for c in columns[1:]))
    write_table(path, params, columns, rows)


def write_service_reach(path, params: dict, reports: dict[str, MetricsReport]) -> None:
    rows = [(s, r.service_reach_outpoints, r.service_reach_addresses,
             r.service_reach_value_sat) for s, r in reports.items()]
    write_table(path, params,
                ["strategy", "outpoints", "addresses", "value_sat"], rows)


def write_overlaps(path, params: dict, overlaps: dict[tuple[str, ...], int]) -> None:
    rows = [("+".join(subset), count) for subset, count in sorted(overlaps.items())]
    write_table(path, params, ["strategies", "tainted_tx_overlap"], rows)


def write_hypotheses(path, params: dict,
                     verdicts: dict[str, list[HypothesisVerdict]]) -> None:
    columns = ["strategy", "hypothesis", "description", "theft_value",
               "n_controls", "rank", "verdict"]
    rows = []
    for strategy, items in verdicts.items():
        for v in items:
            rows.append((strategy, v.id, v.description, v.theft_value,
                         len(v.control_values), v.theft_percentile_rank, v.verdict))
    write_table(path, params, columns, rows)


def write_controls(path, params: dict, criteria: ControlCriteria,
                   txids: list[str]) -> None:
    all_params = dict(params)
    all_params.update({
        "criteria_time_radius_days": criteria.time_radius_days,
        "criteria_value_radius_sat": criteria.value_radius_sat,
        "criteria_shape": f"{criteria.shape[0]}-in/{criteria.shape[1]}-out",
        "criteria_shape_mode": criteria.shape_mode,
        "criteria_excluded_txs": len(criteria.exclusion_set),
    })
    write_table(path, all_params, ["control_txid"], [(t,) for t in txids])


def write_profiles(path, params: dict, profiles) -> None:
    columns = ["address", "category", "tx_count_in_window", "first_activity",
               "sent_tx_count", "reused", "fresh"]
    rows = []
    for addr in sorted(profiles):
        p = profiles[addr]
        rows.append((p.address, p.category, p.tx_count_in_window,
                     p.first_activity, p.sent_tx_count, p.reused, p.fresh))
    write_table(path, params, columns, rows)


def write_notes(path, params: dict, extra: list[str] = ()) -> None:
    lines = [REPORT_FORMAT]
    for key in sorted(params):
        lines.append(f"# {key}={_fmt(params[key])}")
    lines.append(H1_DIRECTION_NOTE)
    lines.append(SERVICE_REACH_NOTE)
    lines.extend(extra)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
