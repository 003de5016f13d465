"""Control-group selection: transactions resembling a theft's first
distribution by time, value and shape, outside the theft's own taint.

Candidates inside one another's all-or-nothing taint closure describe the
same coin movement, so each closure group contributes only its earliest
member. The all-or-nothing closure is used because it is the superset of
every other strategy's closure; halting is disabled for the grouping so
the cover is maximal.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .chain import ChainView, Transaction
from .engine import (DAY_SECONDS, PropagationPolicy, TaintLedger, TaintSeed,
                     first_distribution, propagate, seeded_value)
from .errors import SeedNotFound

SHAPE_EXACT = "exact"
SHAPE_INPUT_ONLY = "input-only"


@dataclass(frozen=True)
class ControlCriteria:
    """Matching rules for control candidates.

    shape is the (input address count, output address count) of the
    theft's first distribution transaction; value_radius_sat widens the
    band around the stolen value (default 1,000 BTC).
    """

    time_radius_days: int = 30
    value_radius_sat: int = 100_000_000_000
    shape: tuple[int, int] = (1, 2)
    shape_mode: str = SHAPE_EXACT
    exclusion_set: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.time_radius_days <= 0 or self.value_radius_sat <= 0:
            raise ValueError("criteria radii must be positive")
        if self.shape_mode not in (SHAPE_EXACT, SHAPE_INPUT_ONLY):
            raise ValueError(f"unknown shape mode {self.shape_mode!r}")


def criteria_for_theft(chain: ChainView, seed: TaintSeed,
                       poison_ledger: TaintLedger,
                       time_radius_days: int = 30,
                       value_radius_sat: int = 100_000_000_000,
                       shape_mode: str = SHAPE_EXACT) -> ControlCriteria:
    """Criteria derived from the theft case: shape of its first
    distribution, exclusion set from its all-or-nothing ledger."""
    first = first_distribution(chain, seed)
    if first is None:
        raise SeedNotFound(f"seed {seed.txid} outputs were never spent")
    first_tx = chain.tx_by_id[first[1]]
    shape = (len(chain.input_addresses(first_tx)),
             len(chain.output_addresses(first_tx)))
    exclusion = frozenset(poison_ledger.tainted_txids) | {seed.txid, first_tx.txid}
    return ControlCriteria(
        time_radius_days=time_radius_days,
        value_radius_sat=value_radius_sat,
        shape=shape,
        shape_mode=shape_mode,
        exclusion_set=exclusion,
    )


def relax_shape(criteria: ControlCriteria, mode: str) -> ControlCriteria:
    """Same criteria with the shape-match mode replaced; input-only keeps
    the input address count and accepts any output count."""
    if mode not in (SHAPE_EXACT, SHAPE_INPUT_ONLY):
        raise ValueError(f"unknown shape mode {mode!r}")
    return replace(criteria, shape_mode=mode)


def _matches(chain: ChainView, tx: Transaction, criteria: ControlCriteria,
             t0: int, target_value: int) -> bool:
    if tx.txid in criteria.exclusion_set or tx.is_coinbase:
        return False
    radius = criteria.time_radius_days * DAY_SECONDS
    if not t0 - radius <= tx.timestamp <= t0 + radius:
        return False
    if abs(tx.total_output - target_value) > criteria.value_radius_sat:
        return False
    if len(chain.input_addresses(tx)) != criteria.shape[0]:
        return False
    if criteria.shape_mode == SHAPE_EXACT \
            and len(chain.output_addresses(tx)) != criteria.shape[1]:
        return False
    return True


def select_controls(chain: ChainView, theft_seed: TaintSeed,
                    criteria: ControlCriteria,
                    policy: PropagationPolicy) -> list[str]:
    """Ordered txids of deduplicated control candidates.

    Returns an empty list when nothing matches; callers decide whether
    that is fatal. The policy supplies the window for the closure grouping.
    """
    first = first_distribution(chain, theft_seed)
    if first is None:
        return []
    t0 = first[0]
    target_value = seeded_value(chain, theft_seed)

    candidates = [tx.txid for tx in chain.transactions
                  if _matches(chain, tx, criteria, t0, target_value)]

    closure_policy = PropagationPolicy(
        window_days=policy.window_days, service_halt=False, service_set=None)
    grouped: set[str] = set()
    selected: list[str] = []
    for txid in candidates:  # ascending (height, index) already
        if txid in grouped:
            continue
        selected.append(txid)
        closure = propagate(chain, TaintSeed(txid), "poison", closure_policy)
        grouped.update(closure.tainted_txids & set(candidates))
        grouped.add(txid)
    return selected
