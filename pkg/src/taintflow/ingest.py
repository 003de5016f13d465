"""Line-delimited dataset loading and export (format `taintflow-chain/1`).

One JSON object per line after a version line. Values are integer
satoshis, txids are lowercase hex, and export order is ascending
(block_height, tx_index), which makes exports byte-reproducible.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .chain import ChainView, OutPoint, Transaction, TxOutput, validate_chain
from .errors import DuplicateTxid, IndexBuildError, ParseError

CHAIN_FORMAT = "taintflow-chain/1"

_TXID_RE = re.compile(r"^[0-9a-f]{64}$")
_RECORD_FIELDS = {"txid", "timestamp", "block_height", "tx_index",
                  "size_bytes", "inputs", "outputs"}
_INPUT_FIELDS = {"txid", "vout"}
_OUTPUT_FIELDS = {"address", "value_sat"}


@dataclass
class LoadReport:
    """What a (possibly lenient) load had to skip or repair."""

    unknown_field_count: int = 0
    dropped: list[tuple[int, str]] = field(default_factory=list)  # (line_no, reason)

    @property
    def clean(self) -> bool:
        return not self.dropped


def _require_int(obj, key, line_no, minimum=0):
    value = obj.get(key)
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ParseError(line_no, f"field '{key}' must be an integer >= {minimum}")
    return value


def _parse_txid(value, line_no, what="txid"):
    if not isinstance(value, str) or not _TXID_RE.match(value):
        raise ParseError(line_no, f"{what} must be 64 lowercase hex characters")
    return value


def _parse_record(obj, line_no: int, report: LoadReport) -> Transaction:
    if not isinstance(obj, dict):
        raise ParseError(line_no, "record is not an object")
    report.unknown_field_count += len(set(obj) - _RECORD_FIELDS)

    txid = _parse_txid(obj.get("txid"), line_no)
    timestamp = _require_int(obj, "timestamp", line_no)
    height = _require_int(obj, "block_height", line_no)
    index = _require_int(obj, "tx_index", line_no)
    size = _require_int(obj, "size_bytes", line_no, minimum=1)

    raw_inputs = obj.get("inputs")
    if raw_inputs == "coinbase":
        inputs: tuple[OutPoint, ...] = ()
    elif isinstance(raw_inputs, list) and raw_inputs:
        parsed = []
        for item in raw_inputs:
            if not isinstance(item, dict):
                raise ParseError(line_no, "input entry is not an object")
            report.unknown_field_count += len(set(item) - _INPUT_FIELDS)
            parsed.append(OutPoint(_parse_txid(item.get("txid"), line_no, "input txid"),
                                   _require_int(item, "vout", line_no)))
        inputs = tuple(parsed)
    else:
        raise ParseError(line_no, "inputs must be a non-empty list or 'coinbase'")

    raw_outputs = obj.get("outputs")
    if not isinstance(raw_outputs, list) or not raw_outputs:
        raise ParseError(line_no, "outputs must be a non-empty list")
    outputs = []
    for item in raw_outputs:
        if not isinstance(item, dict):
            raise ParseError(line_no, "output entry is not an object")
        report.unknown_field_count += len(set(item) - _OUTPUT_FIELDS)
        address = item.get("address")
        if not isinstance(address, str) or not address:
            raise ParseError(line_no, "output address must be a non-empty string")
        outputs.append(TxOutput(address, _require_int(item, "value_sat", line_no)))

    try:
        return Transaction(txid, timestamp, height, index, size, inputs, tuple(outputs))
    except ValueError as exc:
        raise ParseError(line_no, str(exc)) from exc


def load_dataset_with_report(path, strict: bool = True) -> tuple[ChainView, LoadReport]:
    """Load a `taintflow-chain/1` file and report what was skipped.

    Strict mode raises on the first problem; lenient mode drops offending
    lines and transactions (recording each drop) until the remaining chain
    validates. Ingestion order never affects the result.
    """
    report = LoadReport()
    text = Path(path).read_text(encoding="utf-8")
    lines = text.splitlines()
    if not lines or lines[0].strip() != CHAIN_FORMAT:
        raise ParseError(1, f"missing version line '{CHAIN_FORMAT}'")

    txs: list[Transaction] = []
    seen_txids: set[str] = set()
    for line_no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            if strict:
                raise ParseError(line_no, f"invalid JSON: {exc.msg}") from exc
            report.dropped.append((line_no, f"invalid JSON: {exc.msg}"))
            continue
        try:
            tx = _parse_record(obj, line_no, report)
        except ParseError as exc:
            if strict:
                raise
            report.dropped.append((line_no, exc.reason))
            continue
        if tx.txid in seen_txids:
            if strict:
                raise DuplicateTxid(tx.txid)
            report.dropped.append((line_no, f"duplicate txid {tx.txid}"))
            continue
        seen_txids.add(tx.txid)
        txs.append(tx)

    chain = ChainView(txs)
    problems = validate_chain(chain)
    if problems.ok:
        return chain, report
    if strict:
        raise IndexBuildError(problems)
    # Dropping a transaction can orphan its spenders, so iterate to a fixpoint.
    while not problems.ok:
        bad = problems.offending_txids()
        for txid in sorted(bad):
            report.dropped.append((0, f"failed validation: {txid}"))
        txs = [t for t in txs if t.txid not in bad]
        chain = ChainView(txs)
        problems = validate_chain(chain)
    return chain, report


def load_dataset(path, strict: bool = True) -> ChainView:
    chain, _ = load_dataset_with_report(path, strict=strict)
    return chain


def _record(tx: Transaction) -> dict:
    if tx.is_coinbase:
        inputs = "coinbase"
    else:
        inputs = [{"txid": op.txid, "vout": op.vout} for op in tx.inputs]
    return {
        "txid": tx.txid,
        "timestamp": tx.timestamp,
        "block_height": tx.block_height,
        "tx_index": tx.tx_index,
        "size_bytes": tx.size_bytes,
        "inputs": inputs,
        "outputs": [{"address": o.address, "value_sat": o.value} for o in tx.outputs],
    }


def export_dataset(chain: ChainView, path) -> int:
    """Write the chain in canonical form; returns the record count."""
    lines = [CHAIN_FORMAT]
    for tx in chain.transactions:
        lines.append(json.dumps(_record(tx), sort_keys=True, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
    return len(chain.transactions)
