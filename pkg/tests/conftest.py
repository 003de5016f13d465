import hashlib

import pytest

from taintflow import ChainView, OutPoint, Transaction, TxOutput

T0 = 1_600_000_000


def tid(tag: str) -> str:
    """Deterministic 64-hex txid from a short human tag."""
    return hashlib.sha256(tag.encode()).hexdigest()


def make_tx(tag, inputs, outputs, height, index, ts=None, size=250):
    """inputs: [(source_tag, vout)] or [] for coinbase; outputs: [(addr, value)]."""
    return Transaction(
        txid=tid(tag),
        timestamp=T0 + height * 86_400 + index if ts is None else ts,
        block_height=height,
        tx_index=index,
        size_bytes=size,
        inputs=tuple(OutPoint(tid(src), vout) for src, vout in inputs),
        outputs=tuple(TxOutput(addr, value) for addr, value in outputs),
    )


@pytest.fixture
def linear_chain():
    """coinbase -> seed -> a -> b, fully spendable, no fees on the taint path."""
    txs = [
        make_tx("cb", [], [("victim", 1_000)], 0, 0),
        make_tx("seed", [("cb", 0)], [("thief0", 1_000)], 1, 0),
        make_tx("a", [("seed", 0)], [("thief1", 1_000)], 2, 0),
        make_tx("b", [("a", 0)], [("thief2", 1_000)], 3, 0),
    ]
    return ChainView(txs)
