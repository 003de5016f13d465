"""Address classification (service / tainted / clean) and activity flags.

A service address is one whose in-window transaction count exceeds the
nearest-rank percentile threshold (strictly greater, default 99th) of all
per-address counts in the window. An address counts once per transaction
regardless of how many slots it occupies. Service label takes precedence
over tainted, but service addresses that received taint remain members of
the ledger's tainted set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .chain import ChainView
from .engine import DAY_SECONDS, TaintLedger
from .errors import EmptyWindow

SERVICE = "service"
TAINTED = "tainted"
CLEAN = "clean"


@dataclass(frozen=True)
class AddressProfile:
    address: str
    tx_count_in_window: int
    first_activity: int
    sent_tx_count: int
    category: str  # service | tainted | clean
    reused: bool
    fresh: bool


def nearest_rank(sorted_values, pct: float):
    """Nearest-rank percentile of an ascending sequence."""
    if not sorted_values:
        raise ValueError("percentile of empty sequence")
    rank = max(1, math.ceil(pct * len(sorted_values)))
    return sorted_values[min(rank, len(sorted_values)) - 1]


def window_tx_counts(chain: ChainView, window: tuple[int, int]) -> dict[str, int]:
    """Per-address count of distinct in-window transactions (either side)."""
    start, end = window
    counts: dict[str, int] = {}
    for tx in chain.transactions:
        if not start <= tx.timestamp < end:
            continue
        for addr in chain.tx_addresses(tx):
            counts[addr] = counts.get(addr, 0) + 1
    return counts


def classify_service_addresses(chain: ChainView, window: tuple[int, int],
                               percentile: float = 0.99
                               ) -> tuple[int, frozenset[str]]:
    """Threshold and the set of addresses strictly above it."""
    counts = window_tx_counts(chain, window)
    if not counts:
        raise EmptyWindow(f"no transactions in [{window[0]}, {window[1]})")
    threshold = nearest_rank(sorted(counts.values()), percentile)
    service_set = frozenset(a for a, c in counts.items() if c > threshold)
    return threshold, service_set


def _first_tainted_receipt(chain: ChainView, ledger: TaintLedger) -> dict[str, int]:
    receipts: dict[str, int] = {}
    for op in ledger.marks:
        if op.txid == ledger.seed.txid:
            continue
        ts = chain.tx_by_id[op.txid].timestamp
        addr = chain.outpoint_index[op].address
        if addr not in receipts or ts < receipts[addr]:
            receipts[addr] = ts
    return receipts


def profile_addresses(chain: ChainView, ledger: TaintLedger,
                      service_set: frozenset[str]) -> dict[str, AddressProfile]:
    """Profiles for every address active in the ledger's window.

    reused counts sent transactions only (receiving is outside the owner's
    control), over all history up to the window end. fresh means the
    address had no activity at all before its first tainted receipt.
    """
    if ledger.t0 is None:
        return {}
    window = (ledger.t0, ledger.t0 + ledger.policy.window_days * DAY_SECONDS)
    counts = window_tx_counts(chain, window)
    receipts = _first_tainted_receipt(chain, ledger)

    profiles: dict[str, AddressProfile] = {}
    for addr in set(counts) | set(ledger.tainted_addresses):
        sent = 0
        for txid, role in chain.address_index.get(addr, ()):
            if role == "sender" and chain.tx_by_id[txid].timestamp < window[1]:
                sent += 1
        if addr in service_set:
            category = SERVICE
        elif addr in ledger.tainted_addresses:
            category = TAINTED
        else:
            category = CLEAN
        first = chain.first_activity[addr]
        fresh = addr in receipts and first >= receipts[addr]
        profiles[addr] = AddressProfile(
            address=addr,
            tx_count_in_window=counts.get(addr, 0),
            first_activity=first,
            sent_tx_count=sent,
            category=category,
            reused=sent >= 2,
            fresh=fresh,
        )
    return profiles
