"""Deterministic synthetic chains with scripted theft behaviour and exact
per-satoshi ground truth.

A scenario plays out background wallet traffic, a few high-activity
service addresses, and optionally one scripted theft. The true movement
of every stolen satoshi is tracked during generation with byte-per-satoshi
labels, entirely independent of the propagation engine, and recorded as
the ground truth that accuracy scoring and the oracle tests rely on.

Thief behaviours:

* peel-chain           split a small payment off, pass the rest onward
* fan-out              split the loot into many outputs over a few days
* fifo-consistent      mix clean decoys so the true flow equals the
                       in-order carve of the recorded inputs
* lifo-consistent      same, with the stolen input recorded last
* reorder-adversarial  recorded input order is shuffled independently of
                       the true flow, defeating order-based tracking

Outputs that truly carry stolen satoshis never re-enter the background
spending pools, so the ground truth is final once the thief stops; clean
change from the thief's mixes does circulate, which is what lets the
proportional strategy balloon while order-based tracking stays tight.

Generation is single-threaded and bit-reproducible for a given rng seed.
"""

from __future__ import annotations

import hashlib
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .chain import ChainView, OutPoint, Transaction, TxOutput
from .engine import TaintLedger
from .errors import ChainMismatch, ParseError, ScenarioError
from .marks import taint_value

TRUTH_FORMAT = "taintflow-truth/1"

BEHAVIORS = ("peel-chain", "fan-out", "fifo-consistent", "lifo-consistent",
             "reorder-adversarial")

BASE_TIMESTAMP = 1_500_000_000
DAY = 86_400


@dataclass(frozen=True)
class TheftSpec:
    amount_sat: int
    distribution_day: int
    behavior: str


@dataclass(frozen=True)
class ScenarioSpec:
    rng_seed: int
    population: int
    duration_days: int
    theft: TheftSpec | None = None
    service_count: int = 2
    service_txs_per_day: int = 4
    background_txs_per_day: int | None = None  # default: population // 2
    fee_band: tuple[int, int] = (1, 5)  # sat per byte


@dataclass
class GroundTruth:
    """Exact stolen-satoshi content per outpoint, past and present.

    content_sat covers every outpoint that ever held stolen satoshis;
    summing it over outpoints that were never spent, plus the stolen
    portion of fees, gives back the theft amount.
    """

    theft_txid: str | None
    seed_vouts: tuple[int, ...]
    amount_sat: int
    content_sat: dict[OutPoint, int]
    stolen_fee_sat: int
    thief_addresses: frozenset[str]


@dataclass(frozen=True)
class TrackingScore:
    satoshi_recall: float
    satoshi_precision: float
    address_recall: float
    address_precision: float


def _tx_size(n_in: int, n_out: int) -> int:
    return 10 + 148 * n_in + 34 * n_out


class _Party:
    """A wallet (rotating addresses) or a service (one sticky address)."""

    def __init__(self, prefix: str, rotate: float):
        self.prefix = prefix
        self.rotate = rotate
        self.addr_count = 0
        self.current = self._new_addr()
        self.utxos: list[tuple[OutPoint, int]] = []

    def _new_addr(self) -> str:
        self.addr_count += 1
        return f"{self.prefix}a{self.addr_count}"

    def address(self, rng: random.Random) -> str:
        if rng.random() < self.rotate:
            self.current = self._new_addr()
        return self.current

    def cover(self, rng: random.Random, amount: int, rate: int,
              n_out: int, max_inputs: int = 3):
        """Pop utxos covering amount plus fee; None if it cannot."""
        picked: list[tuple[OutPoint, int]] = []
        total = 0
        while self.utxos and len(picked) < max_inputs:
            picked.append(self.utxos.pop())
            total += picked[-1][1]
            fee = rate * _tx_size(len(picked), n_out)
            if total >= amount + fee:
                return picked, fee
        self.utxos.extend(reversed(picked))
        return None


class _Builder:
    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.rng = random.Random(spec.rng_seed)
        self.counter = 0
        self.day_pending: list[tuple[str, tuple, tuple]] = []
        self.finished: list[Transaction] = []
        self.spent: set[OutPoint] = set()

        self.wallets = [_Party(f"w{i}", rotate=0.5) for i in range(spec.population)]
        self.services = [_Party(f"svc{i}", rotate=0.0) for i in range(spec.service_count)]

        # ground truth state
        self.labels: dict[OutPoint, bytearray] = {}
        self.content: dict[OutPoint, int] = {}
        self.stolen_fee = 0
        self.thief_addresses: set[str] = set()
        self.theft_txid: str | None = None
        self.thief_spine: list[tuple[OutPoint, int]] = []
        self.thief_floats: list[tuple[OutPoint, int]] = []
        self.thief_addr_count = 0

    # -- low-level assembly ------------------------------------------------

    def _txid(self) -> str:
        digest = hashlib.sha256(
            f"{self.spec.rng_seed}:{self.counter}".encode()).hexdigest()
        self.counter += 1
        return digest

    def emit(self, inputs: list[OutPoint], outputs: list[TxOutput]) -> str:
        txid = self._txid()
        self.day_pending.append((txid, tuple(inputs), tuple(outputs)))
        self.spent.update(inputs)
        return txid

    def close_day(self, day: int) -> None:
        n = len(self.day_pending)
        for i, (txid, inputs, outputs) in enumerate(self.day_pending):
            ts = BASE_TIMESTAMP + day * DAY + min(DAY - 1, (i * DAY) // max(n, 1))
            self.finished.append(Transaction(
                txid=txid, timestamp=ts, block_height=day, tx_index=i,
                size_bytes=_tx_size(len(inputs), len(outputs)),
                inputs=inputs, outputs=outputs))
        self.day_pending = []

    def pool(self, party: _Party, op: OutPoint, value: int) -> None:
        # stolen-bearing outputs are terminal outside the thief's control
        assert self.content.get(op, 0) == 0
        party.utxos.append((op, value))

    def rate(self) -> int:
        lo, hi = self.spec.fee_band
        return self.rng.randint(lo, hi)

    # -- ground-truth bookkeeping -------------------------------------------

    def flow(self, ordered_inputs: list[tuple[OutPoint, int]],
             out_ops: list[tuple[OutPoint, int]]) -> None:
        """Carve stolen-satoshi labels from inputs (in true spending order)
        into outputs; whatever spills past the outputs was paid as fee."""
        buf = bytearray()
        for op, value in ordered_inputs:
            label = self.labels.pop(op, None)
            buf.extend(label if label is not None else bytes(value))
        offset = 0
        for op, value in out_ops:
            piece = buf[offset:offset + value]
            offset += value
            stolen = piece.count(1)
            if stolen:
                self.labels[op] = piece
                self.content[op] = stolen
        self.stolen_fee += buf[offset:].count(1)

    # -- population scripts --------------------------------------------------

    def coinbase(self) -> None:
        outputs = [TxOutput(w.current, 1_000_000) for w in self.wallets]
        outputs += [TxOutput(s.current, 5_000_000) for s in self.services]
        theft = self.spec.theft
        if theft:
            theft_fee = self._theft_fee()
            outputs.append(TxOutput("victim", theft.amount_sat + theft_fee))
            for _ in range(16):
                addr = self._thief_addr()
                outputs.append(TxOutput(
                    addr, self.rng.randint(max(theft.amount_sat // 4, 2_000),
                                           max(theft.amount_sat // 2, 4_000))))
        txid = self.emit([], outputs)
        for i, w in enumerate(self.wallets):
            self.pool(w, OutPoint(txid, i), 1_000_000)
        base = len(self.wallets)
        for i, s in enumerate(self.services):
            self.pool(s, OutPoint(txid, base + i), 5_000_000)
        if theft:
            self.victim_utxo = OutPoint(txid, base + len(self.services))
            float_base = base + len(self.services) + 1
            for k in range(16):
                op = OutPoint(txid, float_base + k)
                self.thief_floats.append((op, outputs[float_base + k].value))

    def _theft_fee(self) -> int:
        lo, hi = self.spec.fee_band
        return ((lo + hi) // 2 or 1) * _tx_size(1, 1)

    def _thief_addr(self) -> str:
        self.thief_addr_count += 1
        addr = f"t{self.thief_addr_count}"
        self.thief_addresses.add(addr)
        return addr

    def background_tx(self) -> bool:
        rng = self.rng
        for _ in range(6):
            sender = self.wallets[rng.randrange(len(self.wallets))]
            amount = rng.randint(500, 5_000)
            picked = sender.cover(rng, amount, self.rate(), n_out=2)
            if picked:
                break
        else:
            return False
        inputs, fee = picked
        recipient = self.wallets[rng.randrange(len(self.wallets))]
        total_in = sum(v for _, v in inputs)
        change = total_in - amount - fee
        outputs = [TxOutput(recipient.address(rng), amount)]
        if change > 0:
            outputs.append(TxOutput(sender.address(rng), change))
        txid = self.emit([op for op, _ in inputs], outputs)
        self.pool(recipient, OutPoint(txid, 0), amount)
        if change > 0:
            self.pool(sender, OutPoint(txid, 1), change)
        return True

    def service_tx(self, svc: _Party, deposit: bool) -> None:
        rng = self.rng
        amount = rng.randint(500, 3_000)
        if deposit:
            for _ in range(6):
                wallet = self.wallets[rng.randrange(len(self.wallets))]
                picked = wallet.cover(rng, amount, self.rate(), n_out=2)
                if picked:
                    break
            else:
                return
            inputs, fee = picked
            total_in = sum(v for _, v in inputs)
            change = total_in - amount - fee
            outputs = [TxOutput(svc.current, amount)]
            if change > 0:
                outputs.append(TxOutput(wallet.address(rng), change))
            txid = self.emit([op for op, _ in inputs], outputs)
            self.pool(svc, OutPoint(txid, 0), amount)
            if change > 0:
                self.pool(wallet, OutPoint(txid, 1), change)
        else:
            picked = svc.cover(rng, amount, self.rate(), n_out=2)
            if not picked:
                return
            inputs, fee = picked
            wallet = self.wallets[rng.randrange(len(self.wallets))]
            total_in = sum(v for _, v in inputs)
            change = total_in - amount - fee
            outputs = [TxOutput(wallet.address(rng), amount)]
            if change > 0:
                outputs.append(TxOutput(svc.current, change))
            txid = self.emit([op for op, _ in inputs], outputs)
            self.pool(wallet, OutPoint(txid, 0), amount)
            if change > 0:
                self.pool(svc, OutPoint(txid, 1), change)

    # -- theft scripts ---------------------------------------------------------

    def theft_tx(self) -> None:
        theft = self.spec.theft
        addr = self._thief_addr()
        txid = self.emit([self.victim_utxo], [TxOutput(addr, theft.amount_sat)])
        self.theft_txid = txid
        op = OutPoint(txid, 0)
        self.labels[op] = bytearray(b"\x01" * theft.amount_sat)
        self.content[op] = theft.amount_sat
        self.thief_spine.append((op, theft.amount_sat))

    def thief_day(self, step: int) -> None:
        behavior = self.spec.theft.behavior
        if step == 0:
            self.theft_tx()
        if behavior == "peel-chain":
            if step <= 5:
                for _ in range(2):
                    self._peel()
        elif behavior == "fan-out":
            if step == 0:
                self._split(parts=4)
            elif step <= 3:
                for _ in range(min(4, len(self.thief_spine))):
                    self._split(parts=3)
        else:
            if step <= 5:
                for _ in range(2):
                    self._mix(behavior)
        if step == 6:
            self._service_exit()

    def _peel(self) -> None:
        rng = self.rng
        if not self.thief_spine:
            return
        op, value = self.thief_spine.pop()
        fee = self.rate() * _tx_size(1, 2)
        if value <= fee + 2_000:
            self.thief_spine.append((op, value))
            return
        peel = max(1_000, int(value * rng.uniform(0.05, 0.15)))
        change = value - fee - peel
        sink = f"m{self.counter}"
        addr = self._thief_addr()
        txid = self.emit([op], [TxOutput(sink, peel), TxOutput(addr, change)])
        self.flow([(op, value)],
                  [(OutPoint(txid, 0), peel), (OutPoint(txid, 1), change)])
        self.thief_spine.append((OutPoint(txid, 1), change))

    def _split(self, parts: int) -> None:
        rng = self.rng
        if not self.thief_spine:
            return
        op, value = self.thief_spine.pop(0)
        fee = self.rate() * _tx_size(1, parts)
        usable = value - fee
        if usable < parts * 1_000:
            self.thief_spine.append((op, value))
            return
        cuts: set[int] = set()
        while len(cuts) < parts - 1:
            cuts.add(rng.randint(1, usable - 1))
        bounds = [0] + sorted(cuts) + [usable]
        sizes = [b - a for a, b in zip(bounds, bounds[1:])]
        outputs = [TxOutput(self._thief_addr(), s) for s in sizes]
        txid = self.emit([op], outputs)
        out_ops = [(OutPoint(txid, j), s) for j, s in enumerate(sizes)]
        self.flow([(op, value)], out_ops)
        self.thief_spine.extend(out_ops)

    def _mix(self, behavior: str) -> None:
        """One mixing hop: a stolen utxo and a clean decoy in, the stolen
        value onward and the decoy change to a random wallet."""
        rng = self.rng
        if not self.thief_spine or not self.thief_floats:
            return
        s_op, s_value = self.thief_spine.pop()
        c_op, c_value = self.thief_floats.pop()
        fee = self.rate() * _tx_size(2, 2)
        if c_value <= fee:
            self.thief_spine.append((s_op, s_value))
            return
        next_addr = self._thief_addr()
        wallet = self.wallets[rng.randrange(len(self.wallets))]
        outputs = [TxOutput(next_addr, s_value),
                   TxOutput(wallet.address(rng), c_value - fee)]

        stolen_first = [(s_op, s_value), (c_op, c_value)]
        clean_first = [(c_op, c_value), (s_op, s_value)]
        if behavior == "fifo-consistent":
            recorded, true_order = stolen_first, stolen_first
        elif behavior == "lifo-consistent":
            recorded, true_order = clean_first, stolen_first
        else:  # reorder-adversarial
            recorded = stolen_first if rng.random() < 0.5 else clean_first
            true_order = stolen_first if rng.random() < 0.5 else clean_first

        txid = self.emit([op for op, _ in recorded], outputs)
        out_ops = [(OutPoint(txid, 0), s_value),
                   (OutPoint(txid, 1), c_value - fee)]
        self.flow(true_order, out_ops)

        spine_op, spine_value = out_ops[0]
        other_op, other_value = out_ops[1]
        if self.content.get(other_op, 0) > self.content.get(spine_op, 0):
            spine_op, spine_value, other_op, other_value = \
                other_op, other_value, spine_op, spine_value
        if self.content.get(spine_op, 0) > 0:
            self.thief_spine.append((spine_op, spine_value))
        if self.content.get(other_op, 0) == 0:
            self.pool(wallet, other_op, other_value)

    def _service_exit(self) -> None:
        if not self.thief_spine or not self.services:
            return
        op, value = self.thief_spine.pop()
        fee = self.rate() * _tx_size(1, 1)
        if value <= fee:
            self.thief_spine.append((op, value))
            return
        svc = self.services[0]
        txid = self.emit([op], [TxOutput(svc.current, value - fee)])
        self.flow([(op, value)], [(OutPoint(txid, 0), value - fee)])

    # -- top level ------------------------------------------------------------

    def build(self) -> tuple[ChainView, GroundTruth]:
        spec = self.spec
        theft = spec.theft
        per_day = spec.background_txs_per_day
        if per_day is None:
            per_day = max(1, spec.population // 2)

        for day in range(spec.duration_days):
            if day == 0:
                self.coinbase()
            for _ in range(per_day):
                self.background_tx()
            for k, svc in enumerate(self.services):
                for j in range(spec.service_txs_per_day):
                    self.service_tx(svc, deposit=(j + k) % 2 == 0)
            if theft and day >= theft.distribution_day:
                self.thief_day(day - theft.distribution_day)
            self.close_day(day)

        chain = ChainView(self.finished)
        unspent_total = sum(c for op, c in self.content.items()
                            if op not in self.spent)
        if theft:
            assert unspent_total + self.stolen_fee == theft.amount_sat
        truth = GroundTruth(
            theft_txid=self.theft_txid,
            seed_vouts=(0,) if theft else (),
            amount_sat=theft.amount_sat if theft else 0,
            content_sat=dict(self.content),
            stolen_fee_sat=self.stolen_fee,
            thief_addresses=frozenset(self.thief_addresses),
        )
        return chain, truth


def generate(spec: ScenarioSpec) -> tuple[ChainView, GroundTruth]:
    """Build the scenario chain and its ground truth; deterministic for a
    given rng seed."""
    if spec.population < 2:
        raise ScenarioError("population must be at least 2")
    if spec.duration_days < 1:
        raise ScenarioError("duration must be at least one day")
    if spec.service_count < 0 or spec.service_txs_per_day < 0:
        raise ScenarioError("service parameters must be non-negative")
    lo, hi = spec.fee_band
    if not 1 <= lo <= hi:
        raise ScenarioError("fee band must satisfy 1 <= low <= high")
    theft = spec.theft
    if theft is not None:
        if theft.amount_sat <= 0:
            raise ScenarioError("theft amount must be positive")
        if theft.behavior not in BEHAVIORS:
            raise ScenarioError(f"unknown behavior {theft.behavior!r}")
        if not 0 <= theft.distribution_day <= spec.duration_days - 8:
            raise ScenarioError(
                "distribution day must leave at least 8 days of runway")
    return _Builder(spec).build()


def score(chain: ChainView, ledger: TaintLedger, truth: GroundTruth) -> TrackingScore:
    """Recall and precision of a ledger against the ground truth, at
    satoshi level (per-outpoint overlap of tainted and stolen value) and
    at address level (marked addresses vs thief-controlled addresses)."""
    if truth.theft_txid is not None and ledger.seed.txid != truth.theft_txid:
        raise ChainMismatch(
            f"ledger seeded from {ledger.seed.txid}, truth from {truth.theft_txid}")
    for op in truth.content_sat:
        if op not in chain.outpoint_index:
            raise ChainMismatch(f"truth outpoint {op.txid}:{op.vout} not in chain")

    overlap = Fraction(0)
    total_taint = Fraction(0)
    for op, mark in ledger.marks.items():
        taint = Fraction(taint_value(mark, chain.outpoint_index[op].value))
        total_taint += taint
        stolen = truth.content_sat.get(op, 0)
        overlap += min(taint, Fraction(stolen))
    total_stolen = sum(truth.content_sat.values())

    predicted = {chain.outpoint_index[op].address for op in ledger.marks}
    hit = predicted & truth.thief_addresses

    def ratio(num, den) -> float:
        return float(num / den) if den else 1.0

    return TrackingScore(
        satoshi_recall=ratio(overlap, Fraction(total_stolen)),
        satoshi_precision=ratio(overlap, total_taint),
        address_recall=ratio(len(hit), len(truth.thief_addresses)),
        address_precision=ratio(len(hit), len(predicted)),
    )


def write_truth(truth: GroundTruth, path) -> None:
    lines = [
        TRUTH_FORMAT,
        f"# theft_txid={truth.theft_txid or 'none'}",
        f"# seed_vouts={','.join(str(v) for v in truth.seed_vouts) or 'none'}",
        f"# amount_sat={truth.amount_sat}",
        f"# stolen_fee_sat={truth.stolen_fee_sat}",
    ]
    for op in sorted(truth.content_sat):
        lines.append(f"content {op.txid} {op.vout} {truth.content_sat[op]}")
    for addr in sorted(truth.thief_addresses):
        lines.append(f"thief {addr}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_truth(path) -> GroundTruth:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != TRUTH_FORMAT:
        raise ParseError(1, f"missing version line '{TRUTH_FORMAT}'")
    header: dict[str, str] = {}
    content: dict[OutPoint, int] = {}
    thief: set[str] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if line.startswith("# "):
            key, _, value = line[2:].partition("=")
            header[key] = value
        elif line.startswith("content "):
            _, txid, vout, sat = line.split(" ")
            content[OutPoint(txid, int(vout))] = int(sat)
        elif line.startswith("thief "):
            thief.add(line[6:])
        elif line.strip():
            raise ParseError(line_no, f"unrecognized line {line!r}")
    theft_txid = header.get("theft_txid", "none")
    raw_vouts = header.get("seed_vouts", "none")
    return GroundTruth(
        theft_txid=None if theft_txid == "none" else theft_txid,
        seed_vouts=() if raw_vouts == "none" else
        tuple(int(v) for v in raw_vouts.split(",")),
        amount_sat=int(header.get("amount_sat", "0")),
        content_sat=content,
        stolen_fee_sat=int(header.get("stolen_fee_sat", "0")),
        thief_addresses=frozenset(thief),
    )
