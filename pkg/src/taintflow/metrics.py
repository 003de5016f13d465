"""Evaluation metrics, strategy-overlap counts and hypothesis verdicts.

Six per-ledger metrics drive the theft-vs-control comparison: reused and
fresh address shares, average fee value, service reaching, per-day tainted
transaction counts, and distinct addresses per transaction (both sides,
clean inputs included). Day buckets anchor at the first distribution time,
not calendar midnight.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .chain import ChainView, tx_fee
from .engine import DAY_SECONDS, TaintLedger
from .errors import EmptyControls, MixedSeeds, WindowMismatch
from .marks import taint_value
from .profiling import SERVICE, AddressProfile

HYPOTHESES = (
    ("H1", "reused address share of tainted addresses"),
    ("H2", "fresh address share of tainted addresses"),
    ("H3", "average transaction fee value"),
    ("H4", "tainted outputs reaching service addresses"),
    ("H5", "tainted transactions per day"),
    ("H6", "distinct addresses per transaction"),
)

# The stated expectation for reused addresses conflicts with the
# surrounding rationale (privacy-conscious thieves should reuse less);
# H1 keeps the stated "higher" direction and reports carry this note.
H1_DIRECTION_NOTE = (
    "H1 is evaluated in the 'higher' direction as stated; the rationale "
    "behind it argues the opposite, so read its rank accordingly."
)


def _quartiles(values: list[int]) -> dict[str, float]:
    if not values:
        return {"min": 0.0, "q1": 0.0, "median": 0.0, "q3": 0.0,
                "max": 0.0, "mean": 0.0}
    ordered = sorted(values)
    n = len(ordered)

    def at(q: float) -> float:
        # linear interpolation between closest ranks
        pos = q * (n - 1)
        lo = int(pos)
        hi = min(lo + 1, n - 1)
        return ordered[lo] + (pos - lo) * (ordered[hi] - ordered[lo])

    return {
        "min": float(ordered[0]),
        "q1": at(0.25),
        "median": at(0.5),
        "q3": at(0.75),
        "max": float(ordered[-1]),
        "mean": sum(ordered) / n,
    }


@dataclass
class MetricsReport:
    """Per-day series and summary statistics for one ledger."""

    strategy: str
    window_days: int
    t0: int | None
    per_day_tx_counts: list[int]
    pct_service: float
    pct_reused: float
    pct_fresh: float
    addresses_per_tx: list[int]
    addresses_per_tx_stats: dict[str, float]
    avg_fee_value_sat: float
    fee_per_byte_series: list[float]
    service_reach_outpoints: int
    service_reach_addresses: int
    service_reach_value_sat: float
    tainted_tx_count: int
    tainted_address_count: int
    service_addr_count: int
    reused_addr_count: int
    fresh_addr_count: int

    @property
    def service_reach_count(self) -> int:
        return self.service_reach_outpoints

    @property
    def address_type_percentages(self) -> dict[str, float]:
        return {"service": self.pct_service, "reused": self.pct_reused,
                "fresh": self.pct_fresh}

    def totals(self) -> dict[str, float]:
        """Summary row, one column per overall tally."""
        return {
            "tainted_tx": self.tainted_tx_count,
            "tainted_adr": self.tainted_address_count,
            "service_adr": self.service_addr_count,
            "reused_adr": self.reused_addr_count,
            "fresh_adr": self.fresh_addr_count,
            "avg_adr_per_tx": self.addresses_per_tx_stats["mean"],
            "avg_tx_fee_value_sat": self.avg_fee_value_sat,
        }


def compute_metrics(chain: ChainView, ledger: TaintLedger,
                    profiles: dict[str, AddressProfile],
                    window: tuple[int, int] | None = None) -> MetricsReport:
    """All six metrics for one ledger.

    window, when given, must equal the ledger's own (t0, t0 + days) span.
    """
    days = ledger.policy.window_days
    if window is not None:
        expected = None if ledger.t0 is None else \
            (ledger.t0, ledger.t0 + days * DAY_SECONDS)
        if window != expected:
            raise WindowMismatch(f"window {window} does not match ledger {expected}")

    per_day = [0] * days
    fee_sum_per_day = [0.0] * days
    addresses_per_tx: list[int] = []
    fee_total = 0
    tainted_txs = sorted((chain.tx_by_id[txid] for txid in ledger.tainted_txids),
                         key=lambda t: t.position)
    for tx in tainted_txs:
        fee = tx_fee(chain, tx)
        fee_total += fee
        addresses_per_tx.append(len(chain.tx_addresses(tx)))
        if ledger.t0 is not None:
            day = (tx.timestamp - ledger.t0) // DAY_SECONDS
            if 0 <= day < days:
                per_day[day] += 1
                fee_sum_per_day[day] += fee / tx.size_bytes

    fee_series = [fee_sum_per_day[d] / per_day[d] if per_day[d] else 0.0
                  for d in range(days)]

    tainted = ledger.tainted_addresses
    n_addr = len(tainted)
    service_addrs = {a for a in tainted if profiles[a].category == SERVICE}
    reused_addrs = {a for a in tainted if profiles[a].reused}
    fresh_addrs = {a for a in tainted if profiles[a].fresh}

    service_set = {a for a, p in profiles.items() if p.category == SERVICE}
    reach_ops = [op for op in ledger.marks
                 if op.txid != ledger.seed.txid
                 and chain.outpoint_index[op].address in service_set]
    reach_value = sum(
        (Fraction(taint_value(ledger.marks[op], chain.outpoint_index[op].value))
         for op in reach_ops), Fraction(0))

    def pct(part: int) -> float:
        return 100.0 * part / n_addr if n_addr else 0.0

    return MetricsReport(
        strategy=ledger.strategy,
        window_days=days,
        t0=ledger.t0,
        per_day_tx_counts=per_day,
        pct_service=pct(len(service_addrs)),
        pct_reused=pct(len(reused_addrs)),
        pct_fresh=pct(len(fresh_addrs)),
        addresses_per_tx=addresses_per_tx,
        addresses_per_tx_stats=_quartiles(addresses_per_tx),
        avg_fee_value_sat=fee_total / len(tainted_txs) if tainted_txs else 0.0,
        fee_per_byte_series=fee_series,
        service_reach_outpoints=len(reach_ops),
        service_reach_addresses=len({chain.outpoint_index[op].address
                                     for op in reach_ops}),
        service_reach_value_sat=float(reach_value),
        tainted_tx_count=len(ledger.tainted_txids),
        tainted_address_count=n_addr,
        service_addr_count=len(service_addrs),
        reused_addr_count=len(reused_addrs),
        fresh_addr_count=len(fresh_addrs),
    )


def overlap_sets(ledgers: list[TaintLedger]) -> dict[tuple[str, ...], int]:
    """Tainted-transaction intersection size for every non-empty strategy
    subset (the counts behind a Venn diagram)."""
    if len(ledgers) < 2:
        raise ValueError("need at least two ledgers to overlap")
    seeds = {ledger.seed.txid for ledger in ledgers}
    if len(seeds) > 1:
        raise MixedSeeds(f"ledgers seeded from {sorted(seeds)}")
    by_name = {ledger.strategy: ledger.tainted_txids for ledger in ledgers}
    names = sorted(by_name)
    result: dict[tuple[str, ...], int] = {}
    for mask in range(1, 1 << len(names)):
        subset = tuple(n for i, n in enumerate(names) if mask & (1 << i))
        common = set(by_name[subset[0]])
        for name in subset[1:]:
            common &= by_name[name]
        result[subset] = len(common)
    return result


@dataclass(frozen=True)
class HypothesisVerdict:
    id: str
    description: str
    theft_value: float
    control_values: tuple[float, ...]
    theft_percentile_rank: float
    direction_expected: str
    verdict: str  # consistent | inconsistent | inconclusive


def _scalar(report: MetricsReport, hid: str) -> float:
    if hid == "H1":
        return report.pct_reused
    if hid == "H2":
        return report.pct_fresh
    if hid == "H3":
        return report.avg_fee_value_sat
    if hid == "H4":
        return float(report.service_reach_outpoints)
    if hid == "H5":
        return sum(report.per_day_tx_counts) / report.window_days
    if hid == "H6":
        return report.addresses_per_tx_stats["mean"]
    raise ValueError(f"unknown hypothesis {hid}")


def percentile_rank(value: float, controls: list[float]) -> float:
    """Mid-rank of a value among control values, in [0, 1]."""
    below = sum(1 for c in controls if c < value)
    equal = sum(1 for c in controls if c == value)
    return (below + 0.5 * equal) / len(controls)


def evaluate_hypotheses(theft_report: MetricsReport,
                        control_reports: list[MetricsReport],
                        consistent_at: float = 0.75,
                        inconsistent_at: float = 0.25
                        ) -> list[HypothesisVerdict]:
    """Rank each theft metric among the controls and grade it.

    Every hypothesis expects the theft value to be higher; a rank at or
    above consistent_at supports it, at or below inconsistent_at
    contradicts it, anything between is inconclusive.
    """
    if not control_reports:
        raise EmptyControls("need at least one control report")
    verdicts = []
    for hid, description in HYPOTHESES:
        theft_value = _scalar(theft_report, hid)
        control_values = tuple(_scalar(r, hid) for r in control_reports)
        rank = percentile_rank(theft_value, list(control_values))
        if rank >= consistent_at:
            verdict = "consistent"
        elif rank <= inconsistent_at:
            verdict = "inconsistent"
        else:
            verdict = "inconclusive"
        verdicts.append(HypothesisVerdict(
            id=hid,
            description=description,
            theft_value=theft_value,
            control_values=control_values,
            theft_percentile_rank=rank,
            direction_expected="higher",
            verdict=verdict,
        ))
    return verdicts
