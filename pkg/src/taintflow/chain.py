"""Immutable transaction records and the indexed chain view.

All amounts are integer satoshis (1 BTC = 100,000,000 sat), so fee and
conservation arithmetic is exact. Chain order is (block_height, tx_index);
timestamps are used only for day bucketing and window cuts, never for
ordering, because real-world timestamps are not monotone.

A ChainView is immutable once built and safe to share between any number
of concurrent readers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Iterator

from .errors import CycleDetected, DuplicateTxid, NegativeFee, UnresolvedInput

COIN = 100_000_000

SENDER = "sender"
RECEIVER = "receiver"


@dataclass(frozen=True, order=True, slots=True)
class OutPoint:
    """Reference to the vout-th output of a prior transaction."""

    txid: str
    vout: int

    def __post_init__(self):
        if self.vout < 0:
            raise ValueError("vout must be non-negative")


@dataclass(frozen=True, slots=True)
class TxOutput:
    address: str
    value: int

    def __post_init__(self):
        if not self.address:
            raise ValueError("output address must be non-empty")
        if self.value < 0:
            raise ValueError("output value must be non-negative")


@dataclass(frozen=True, slots=True)
class Transaction:
    """One chain transaction.

    Input and output order is preserved exactly as ingested; the
    order-sensitive distribution strategies depend on it. A transaction
    with no inputs is a coinbase.
    """

    txid: str
    timestamp: int
    block_height: int
    tx_index: int
    size_bytes: int
    inputs: tuple[OutPoint, ...]
    outputs: tuple[TxOutput, ...]

    def __post_init__(self):
        object.__setattr__(self, "inputs", tuple(self.inputs))
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if not self.outputs:
            raise ValueError(f"{self.txid}: transaction has no outputs")
        if self.size_bytes <= 0:
            raise ValueError(f"{self.txid}: size_bytes must be positive")
        if self.block_height < 0 or self.tx_index < 0:
            raise ValueError(f"{self.txid}: negative chain position")

    @property
    def is_coinbase(self) -> bool:
        return not self.inputs

    @property
    def position(self) -> tuple[int, int]:
        return (self.block_height, self.tx_index)

    @property
    def total_output(self) -> int:
        return sum(o.value for o in self.outputs)


class ChainView:
    """Read-only indexed view over a set of transactions.

    Structural problems (unresolved inputs, double spends, negative fees,
    duplicate positions) are tolerated at construction and surfaced by
    validate_chain, so loaders can decide whether to abort or repair.
    Duplicate txids are rejected outright because the indices would be
    ambiguous.
    """

    def __init__(self, transactions: Iterable[Transaction]):
        txs = sorted(transactions, key=lambda t: t.position)
        self.transactions: tuple[Transaction, ...] = tuple(txs)
        self.tx_by_id: dict[str, Transaction] = {}
        self.outpoint_index: dict[OutPoint, TxOutput] = {}
        self.spent_by: dict[OutPoint, str] = {}
        self.address_index: dict[str, list[tuple[str, str]]] = {}
        self.first_activity: dict[str, int] = {}
        self._double_spends: list[tuple[OutPoint, str, str]] = []
        self._duplicate_positions: list[tuple[tuple[int, int], str, str]] = []

        seen_pos: dict[tuple[int, int], str] = {}
        for tx in txs:
            if tx.txid in self.tx_by_id:
                raise DuplicateTxid(tx.txid)
            self.tx_by_id[tx.txid] = tx
            if tx.position in seen_pos:
                self._duplicate_positions.append((tx.position, seen_pos[tx.position], tx.txid))
            else:
                seen_pos[tx.position] = tx.txid
            for i, out in enumerate(tx.outputs):
                self.outpoint_index[OutPoint(tx.txid, i)] = out

        for tx in txs:
            for op in tx.inputs:
                if op in self.spent_by:
                    self._double_spends.append((op, self.spent_by[op], tx.txid))
                else:
                    self.spent_by[op] = tx.txid

        for tx in txs:
            for addr in sorted(self.input_addresses(tx)):
                self.address_index.setdefault(addr, []).append((tx.txid, SENDER))
            for addr in sorted(self.output_addresses(tx)):
                self.address_index.setdefault(addr, []).append((tx.txid, RECEIVER))
            for addr in self.input_addresses(tx) | self.output_addresses(tx):
                prev = self.first_activity.get(addr)
                if prev is None or tx.timestamp < prev:
                    self.first_activity[addr] = tx.timestamp

    def __len__(self) -> int:
        return len(self.transactions)

    def resolve(self, op: OutPoint) -> TxOutput:
        out = self.outpoint_index.get(op)
        if out is None:
            raise UnresolvedInput(f"{op.txid}:{op.vout} not found")
        return out

    def input_addresses(self, tx: Transaction) -> frozenset[str]:
        """Distinct addresses of the outputs a transaction spends."""
        found = set()
        for op in tx.inputs:
            out = self.outpoint_index.get(op)
            if out is not None:
                found.add(out.address)
        return frozenset(found)

    def output_addresses(self, tx: Transaction) -> frozenset[str]:
        return frozenset(o.address for o in tx.outputs)

    def tx_addresses(self, tx: Transaction) -> frozenset[str]:
        """Distinct addresses on either side of a transaction."""
        return self.input_addresses(tx) | self.output_addresses(tx)


def tx_fee(chain: ChainView, tx: Transaction) -> int:
    """Input total minus output total, in satoshis; 0 for coinbase."""
    if tx.is_coinbase:
        return 0
    total_in = 0
    for op in tx.inputs:
        out = chain.outpoint_index.get(op)
        if out is None:
            raise UnresolvedInput(f"{tx.txid} spends unknown outpoint {op.txid}:{op.vout}")
        total_in += out.value
    fee = total_in - tx.total_output
    if fee < 0:
        raise NegativeFee(f"{tx.txid}: outputs exceed inputs by {-fee} sat")
    return fee


@dataclass
class ValidationReport:
    """Structural problems found in a chain; empty means propagation-safe."""

    unresolved_inputs: list[tuple[str, OutPoint]] = field(default_factory=list)
    double_spends: list[tuple[OutPoint, str, str]] = field(default_factory=list)
    negative_fees: list[str] = field(default_factory=list)
    duplicate_positions: list[tuple[tuple[int, int], str, str]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.unresolved_inputs or self.double_spends
                    or self.negative_fees or self.duplicate_positions)

    def offending_txids(self) -> set[str]:
        """Txids to drop so the remaining chain can validate."""
        bad = {txid for txid, _ in self.unresolved_inputs}
        bad.update(second for _, _, second in self.double_spends)
        bad.update(self.negative_fees)
        bad.update(second for _, _, second in self.duplicate_positions)
        return bad

    def summary(self) -> str:
        return (f"{len(self.unresolved_inputs)} unresolved inputs, "
                f"{len(self.double_spends)} double spends, "
                f"{len(self.negative_fees)} negative fees, "
                f"{len(self.duplicate_positions)} duplicate positions")


def validate_chain(chain: ChainView) -> ValidationReport:
    """Check resolvability, double spends, fee signs and position clashes.

    Problems are reported, never raised.
    """
    report = ValidationReport(
        double_spends=list(chain._double_spends),
        duplicate_positions=list(chain._duplicate_positions),
    )
    for tx in chain.transactions:
        unresolved = False
        for op in tx.inputs:
            if op not in chain.outpoint_index:
                report.unresolved_inputs.append((tx.txid, op))
                unresolved = True
        if unresolved or tx.is_coinbase:
            continue
        total_in = sum(chain.outpoint_index[op].value for op in tx.inputs)
        if total_in < tx.total_output:
            report.negative_fees.append(tx.txid)
    return report


def temporal_order(chain: ChainView) -> Iterator[Transaction]:
    """Yield transactions ascending by (block_height, tx_index).

    Every spender is yielded after the transaction it spends; a violation
    means the data is corrupt and raises CycleDetected.
    """
    for tx in chain.transactions:
        for op in tx.inputs:
            ref = chain.tx_by_id.get(op.txid)
            if ref is None:
                raise UnresolvedInput(f"{tx.txid} spends unknown txid {op.txid}")
            if ref.position >= tx.position:
                raise CycleDetected(
                    f"{tx.txid} at {tx.position} spends {ref.txid} at {ref.position}")
        yield tx
