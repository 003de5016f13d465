"""Taint propagation under five distribution strategies.

A run starts from a seed transaction whose outputs are fully tainted,
walks the chain in (block_height, tx_index) order, and applies one
strategy's distribution rule to every transaction inside the tainting
window that spends tainted value:

* poison   any tainted input taints every output entirely
* haircut  every output receives the tainted share of the input total
* fifo     inputs fill outputs in order; taint travels as satoshi intervals
* lifo     fifo with the input list reversed
* tiho     the tainted amount fills the highest-value outputs first

The fee behaves as a virtual last output: interval tail for fifo/lifo,
lowest priority slot for tiho, proportional share for haircut. Taint that
lands there is burned and stops propagating. Taint arriving at a service
address is recorded but never propagates onward when halting is enabled
(seed outputs override halting, otherwise a theft from a service could
not be tracked).

Propagation is a pure function of (chain, seed, strategy, policy);
independent runs may execute in parallel over a shared ChainView.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .chain import ChainView, OutPoint, temporal_order, tx_fee
from .errors import (MissingServiceSet, ParseError, SeedNotFound, UnknownStrategy,
                     ValueMismatch, ZeroInputValue)
from .marks import (AmountMark, FractionMark, FullMark, Mark, SegmentsMark,
                    clip_segments, normalize_segments, segments_total,
                    shift_segments, taint_value)

STRATEGIES = ("poison", "haircut", "fifo", "lifo", "tiho")

DAY_SECONDS = 86_400

LEDGER_FORMAT = "taintflow-ledger/1"

InputMarks = list[tuple[int, Mark | None]]


@dataclass(frozen=True)
class TaintSeed:
    """The transaction whose outputs start fully tainted.

    vouts limits seeding to specific output indices; None seeds them all.
    """

    txid: str
    vouts: tuple[int, ...] | None = None


@dataclass(frozen=True)
class PropagationPolicy:
    window_days: int = 15
    service_halt: bool = True
    service_set: frozenset[str] | None = None

    def __post_init__(self):
        if self.window_days < 1:
            raise ValueError("window_days must be >= 1")


@dataclass
class TaintLedger:
    """Result of one propagation run.

    tainted_txids are the transactions processed by the run (the seed is
    the origin, not a result, and is excluded). tainted_addresses are the
    addresses of marked outputs created by those transactions; addresses
    that only appear on seed outputs are likewise excluded. consumed holds
    the outpoints whose taint was passed onward, so marks - consumed is
    the residual taint at the end of the window.
    """

    strategy: str
    seed: TaintSeed
    policy: PropagationPolicy
    t0: int | None
    marks: dict[OutPoint, Mark]
    seed_outpoints: frozenset[OutPoint]
    tainted_txids: frozenset[str]
    tainted_addresses: frozenset[str]
    fee_burned: Fraction
    service_stopped: Fraction
    consumed: frozenset[OutPoint] = frozenset()

    def taint_of(self, chain: ChainView, op: OutPoint) -> int | Fraction:
        return taint_value(self.marks.get(op), chain.outpoint_index[op].value)

    def residual_outpoints(self) -> frozenset[OutPoint]:
        """Marked outpoints whose taint was never passed onward."""
        return frozenset(op for op in self.marks if op not in self.consumed)


def distribute_poison(input_marks: InputMarks, output_values: list[int],
                      fee: int) -> tuple[list[Mark | None], int]:
    """Any tainted input taints every (non-zero) output entirely."""
    tainted = any(taint_value(m, v) > 0 for v, m in input_marks)
    if not tainted:
        return [None] * len(output_values), 0
    return [FullMark() if v > 0 else None for v in output_values], fee


def distribute_haircut(input_marks: InputMarks, output_values: list[int],
                       fee: int) -> tuple[list[Mark | None], Fraction]:
    """Each output receives the tainted share of the total input value."""
    total_in = sum(v for v, _ in input_marks)
    if total_in == 0:
        raise ZeroInputValue("haircut share is undefined for zero input value")
    tainted_in = sum((Fraction(taint_value(m, v)) for v, m in input_marks),
                     Fraction(0))
    if tainted_in == 0:
        return [None] * len(output_values), Fraction(0)
    share = tainted_in / total_in
    out = [FractionMark(share) if v > 0 else None for v in output_values]
    return out, share * fee


def _lift_segments(value: int, mark: Mark | None, offset: int) -> tuple:
    if mark is None or value == 0:
        return ()
    if isinstance(mark, FullMark):
        return ((offset, offset + value),)
    if isinstance(mark, SegmentsMark):
        return shift_segments(mark.segments, offset)
    raise TypeError(f"mark kind unusable under interval flow: {mark!r}")


def distribute_fifo(input_marks: InputMarks, output_values: list[int],
                    fee: int) -> tuple[list[Mark | None], int]:
    """Inputs concatenate in order; outputs carve consecutive intervals.

    The fee occupies the final interval. Requires exact conservation
    (sum of inputs = sum of outputs + fee).
    """
    total_in = sum(v for v, _ in input_marks)
    total_out = sum(output_values)
    if total_in != total_out + fee:
        raise ValueMismatch(
            f"inputs {total_in} != outputs {total_out} + fee {fee}")
    tainted = []
    offset = 0
    for value, mark in input_marks:
        tainted.extend(_lift_segments(value, mark, offset))
        offset += value
    tainted = normalize_segments(tainted)

    out_marks: list[Mark | None] = []
    offset = 0
    for value in output_values:
        local = clip_segments(tainted, offset, offset + value)
        out_marks.append(SegmentsMark(local) if local else None)
        offset += value
    fee_taint = segments_total(clip_segments(tainted, total_out, total_in))
    return out_marks, fee_taint


def distribute_lifo(input_marks: InputMarks, output_values: list[int],
                    fee: int) -> tuple[list[Mark | None], int]:
    """Exactly fifo applied to the reversed input list; each input's own
    interval orientation is preserved."""
    return distribute_fifo(list(reversed(input_marks)), output_values, fee)


def distribute_tiho(input_marks: InputMarks, output_values: list[int],
                    fee: int) -> tuple[list[Mark | None], int]:
    """The tainted input total greedily fills the highest-value outputs.

    Ties break by original output index; the fee is a virtual output with
    the lowest priority, so taint reaches it only after every real output
    is full. The tainted total is floored to whole satoshis (it already is
    whole whenever the inputs carry amount or full marks).
    """
    total_in = sum(v for v, _ in input_marks)
    total_out = sum(output_values)
    if total_in != total_out + fee:
        raise ValueMismatch(
            f"inputs {total_in} != outputs {total_out} + fee {fee}")
    tainted_in = sum((Fraction(taint_value(m, v)) for v, m in input_marks),
                     Fraction(0))
    remaining = int(tainted_in)  # floor; exact for in-strategy marks
    if remaining == 0:
        return [None] * len(output_values), 0
    amounts = [0] * len(output_values)
    for j in sorted(range(len(output_values)),
                    key=lambda j: (-output_values[j], j)):
        take = min(remaining, output_values[j])
        amounts[j] = take
        remaining -= take
    out_marks = [AmountMark(a) if a > 0 else None for a in amounts]
    return out_marks, remaining


DISTRIBUTORS = {
    "poison": distribute_poison,
    "haircut": distribute_haircut,
    "fifo": distribute_fifo,
    "lifo": distribute_lifo,
    "tiho": distribute_tiho,
}


def first_distribution(chain: ChainView, seed: TaintSeed) -> tuple[int, str] | None:
    """Timestamp and txid of the first transaction spending a seed output,
    or None if the seed outputs were never spent."""
    seed_tx = chain.tx_by_id.get(seed.txid)
    if seed_tx is None:
        raise SeedNotFound(seed.txid)
    vouts = seed.vouts if seed.vouts is not None else range(len(seed_tx.outputs))
    best: tuple[tuple[int, int], int, str] | None = None
    for v in vouts:
        if not 0 <= v < len(seed_tx.outputs):
            raise SeedNotFound(f"{seed.txid} has no output {v}")
        spender_id = chain.spent_by.get(OutPoint(seed.txid, v))
        if spender_id is None:
            continue
        spender = chain.tx_by_id[spender_id]
        if best is None or spender.position < best[0]:
            best = (spender.position, spender.timestamp, spender.txid)
    if best is None:
        return None
    return best[1], best[2]


def seeded_value(chain: ChainView, seed: TaintSeed) -> int:
    """Total satoshi value of the seeded outputs."""
    seed_tx = chain.tx_by_id.get(seed.txid)
    if seed_tx is None:
        raise SeedNotFound(seed.txid)
    vouts = seed.vouts if seed.vouts is not None else range(len(seed_tx.outputs))
    return sum(seed_tx.outputs[v].value for v in vouts)


def propagate(chain: ChainView, seed: TaintSeed, strategy: str,
              policy: PropagationPolicy) -> TaintLedger:
    """Run one strategy from a seed over the chain and return the ledger."""
    distribute = DISTRIBUTORS.get(strategy)
    if distribute is None:
        raise UnknownStrategy(f"{strategy!r}; expected one of {', '.join(STRATEGIES)}")
    seed_tx = chain.tx_by_id.get(seed.txid)
    if seed_tx is None:
        raise SeedNotFound(seed.txid)
    if policy.service_halt and policy.service_set is None:
        raise MissingServiceSet("service_halt requires a service_set")
    service_set = policy.service_set or frozenset()

    vouts = seed.vouts if seed.vouts is not None else tuple(range(len(seed_tx.outputs)))
    marks: dict[OutPoint, Mark] = {}
    seed_outpoints = set()
    for v in vouts:
        if not 0 <= v < len(seed_tx.outputs):
            raise SeedNotFound(f"{seed.txid} has no output {v}")
        if seed_tx.outputs[v].value > 0:
            op = OutPoint(seed.txid, v)
            marks[op] = FullMark()
            seed_outpoints.add(op)

    first = first_distribution(chain, seed)
    t0 = first[0] if first else None

    tainted_txids: set[str] = set()
    consumed: set[OutPoint] = set()
    fee_burned = Fraction(0)

    if t0 is not None:
        deadline = t0 + policy.window_days * DAY_SECONDS
        for tx in temporal_order(chain):
            if tx.is_coinbase or tx.timestamp >= deadline:
                continue
            effective: InputMarks = []
            spent_marked: list[OutPoint] = []
            for op in tx.inputs:
                out = chain.outpoint_index[op]
                mark = marks.get(op)
                if mark is not None and policy.service_halt \
                        and out.address in service_set and op not in seed_outpoints:
                    mark = None  # halted: taint stays at the service
                effective.append((out.value, mark))
                if mark is not None:
                    spent_marked.append(op)
            if not spent_marked:
                continue
            out_marks, fee_taint = distribute(
                effective, [o.value for o in tx.outputs], tx_fee(chain, tx))
            tainted_txids.add(tx.txid)
            consumed.update(spent_marked)
            fee_burned += Fraction(fee_taint)
            for j, mark in enumerate(out_marks):
                if mark is not None:
                    marks[OutPoint(tx.txid, j)] = mark

    tainted_addresses = frozenset(
        chain.outpoint_index[op].address
        for op in marks if op.txid != seed.txid)
    service_stopped = sum(
        (Fraction(taint_value(marks[op], chain.outpoint_index[op].value))
         for op in marks
         if op not in consumed and chain.outpoint_index[op].address in service_set),
        Fraction(0))

    return TaintLedger(
        strategy=strategy,
        seed=seed,
        policy=policy,
        t0=t0,
        marks=marks,
        seed_outpoints=frozenset(seed_outpoints),
        tainted_txids=frozenset(tainted_txids),
        tainted_addresses=tainted_addresses,
        fee_burned=fee_burned,
        service_stopped=service_stopped,
        consumed=frozenset(consumed),
    )


def _format_mark(mark: Mark) -> str:
    if isinstance(mark, FullMark):
        return "full"
    if isinstance(mark, FractionMark):
        f = mark.fraction
        return f"fraction {f.numerator}/{f.denominator}"
    if isinstance(mark, SegmentsMark):
        return "segments " + ",".join(f"{a}-{b}" for a, b in mark.segments)
    if isinstance(mark, AmountMark):
        return f"amount {mark.amount}"
    raise TypeError(f"not a taint mark: {mark!r}")


def _parse_mark(kind: str, payload: str, line_no: int) -> Mark:
    try:
        if kind == "full":
            return FullMark()
        if kind == "fraction":
            num, den = payload.split("/")
            return FractionMark(Fraction(int(num), int(den)))
        if kind == "segments":
            segs = tuple(tuple(int(x) for x in part.split("-"))
                         for part in payload.split(","))
            return SegmentsMark(segs)
        if kind == "amount":
            return AmountMark(int(payload))
    except (ValueError, TypeError) as exc:
        raise ParseError(line_no, f"bad {kind} mark: {exc}") from exc
    raise ParseError(line_no, f"unknown mark kind {kind!r}")


def write_ledger(ledger: TaintLedger, path) -> None:
    """Serialize a ledger (format `taintflow-ledger/1`), marks ascending
    by (txid, vout)."""
    vouts = "all" if ledger.seed.vouts is None else \
        ",".join(str(v) for v in ledger.seed.vouts)
    lines = [
        LEDGER_FORMAT,
        f"# strategy={ledger.strategy}",
        f"# seed_txid={ledger.seed.txid}",
        f"# seed_vouts={vouts}",
        f"# window_days={ledger.policy.window_days}",
        f"# service_halt={'true' if ledger.policy.service_halt else 'false'}",
        f"# t0={'none' if ledger.t0 is None else ledger.t0}",
        f"# fee_burned={ledger.fee_burned.numerator}/{ledger.fee_burned.denominator}",
        f"# service_stopped={ledger.service_stopped.numerator}/{ledger.service_stopped.denominator}",
        f"# tainted_txs={len(ledger.tainted_txids)}",
        f"# tainted_addresses={len(ledger.tainted_addresses)}",
    ]
    for txid in sorted(ledger.tainted_txids):
        lines.append(f"tx {txid}")
    for op in sorted(ledger.marks):
        lines.append(f"mark {op.txid} {op.vout} {_format_mark(ledger.marks[op])}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_ledger(path, chain: ChainView) -> TaintLedger:
    """Load a serialized ledger back against its chain.

    The consumed set is not serialized; a loaded ledger supports set and
    metric queries but not residual-taint conservation checks.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != LEDGER_FORMAT:
        raise ParseError(1, f"missing version line '{LEDGER_FORMAT}'")
    header: dict[str, str] = {}
    tainted_txids: set[str] = set()
    marks: dict[OutPoint, Mark] = {}
    for line_no, line in enumerate(lines[1:], start=2):
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            header[key] = value
        elif line.startswith("tx "):
            tainted_txids.add(line[3:])
        elif line.startswith("mark "):
            parts = line.split(" ", 3)
            if len(parts) < 4:
                raise ParseError(line_no, "mark line needs txid, vout and kind")
            _, txid, vout, rest = parts
            kind, _, payload = rest.partition(" ")
            marks[OutPoint(txid, int(vout))] = _parse_mark(kind, payload, line_no)
        elif line.strip():
            raise ParseError(line_no, f"unrecognized line {line!r}")

    try:
        seed_vouts = header["seed_vouts"]
        seed = TaintSeed(
            header["seed_txid"],
            None if seed_vouts == "all" else tuple(int(v) for v in seed_vouts.split(",")))
        policy = PropagationPolicy(
            window_days=int(header["window_days"]),
            service_halt=header["service_halt"] == "true",
            service_set=None)
        t0 = None if header["t0"] == "none" else int(header["t0"])
        burn_n, burn_d = header["fee_burned"].split("/")
        stop_n, stop_d = header["service_stopped"].split("/")
    except KeyError as exc:
        raise ParseError(1, f"missing header field {exc}") from exc

    seed_outpoints = frozenset(op for op in marks if op.txid == seed.txid)
    tainted_addresses = frozenset(
        chain.outpoint_index[op].address for op in marks if op.txid != seed.txid)
    return TaintLedger(
        strategy=header["strategy"],
        seed=seed,
        policy=policy,
        t0=t0,
        marks=marks,
        seed_outpoints=seed_outpoints,
        tainted_txids=frozenset(tainted_txids),
        tainted_addresses=tainted_addresses,
        fee_burned=Fraction(int(burn_n), int(burn_d)),
        service_stopped=Fraction(int(stop_n), int(stop_d)),
    )
