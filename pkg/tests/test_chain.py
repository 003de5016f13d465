import random

import pytest

from taintflow import (COIN, ChainView, OutPoint, Transaction, TxOutput,
                       temporal_order, tx_fee, validate_chain)
from taintflow.errors import (CycleDetected, DuplicateTxid, NegativeFee,
                              UnresolvedInput)

from conftest import make_tx, tid


def test_fee_follows_from_figure_arithmetic():
    # 7 BTC + 3 BTC in, 9 BTC + 1 BTC out: the classic worked example has no fee
    chain = ChainView([
        make_tx("cb", [], [("a", 7 * COIN), ("b", 3 * COIN)], 0, 0),
        make_tx("mix", [("cb", 0), ("cb", 1)], [("c", 9 * COIN), ("d", 1 * COIN)], 1, 0),
    ])
    assert tx_fee(chain, chain.tx_by_id[tid("mix")]) == 0


def test_fee_coinbase_is_zero():
    chain = ChainView([make_tx("cb", [], [("miner", 50 * COIN)], 0, 0)])
    assert tx_fee(chain, chain.tx_by_id[tid("cb")]) == 0


def test_fee_direct_subtraction():
    chain = ChainView([
        make_tx("cb", [], [("a", 10_000)], 0, 0),
        make_tx("pay", [("cb", 0)], [("b", 9_000)], 1, 0),
    ])
    assert tx_fee(chain, chain.tx_by_id[tid("pay")]) == 1_000


def test_fee_errors():
    chain = ChainView([
        make_tx("cb", [], [("a", 100)], 0, 0),
        make_tx("over", [("cb", 0)], [("b", 200)], 1, 0),
        make_tx("ghost", [("nowhere", 0)], [("c", 1)], 1, 1),
    ])
    with pytest.raises(NegativeFee):
        tx_fee(chain, chain.tx_by_id[tid("over")])
    with pytest.raises(UnresolvedInput):
        tx_fee(chain, chain.tx_by_id[tid("ghost")])


def test_conservation_identity():
    # sum(inputs) == sum(outputs) + fee for every non-coinbase tx
    chain = ChainView([
        make_tx("cb", [], [("a", 5_000), ("b", 3_000)], 0, 0),
        make_tx("t1", [("cb", 0)], [("c", 2_000), ("d", 2_500)], 1, 0),
        make_tx("t2", [("t1", 0), ("cb", 1)], [("e", 4_900)], 2, 0),
    ])
    for tx in chain.transactions:
        if tx.is_coinbase:
            continue
        total_in = sum(chain.outpoint_index[op].value for op in tx.inputs)
        assert total_in == tx.total_output + tx_fee(chain, tx)


def test_output_model_validation():
    with pytest.raises(ValueError):
        TxOutput("", 5)
    with pytest.raises(ValueError):
        TxOutput("a", -1)
    with pytest.raises(ValueError):
        OutPoint(tid("x"), -1)
    with pytest.raises(ValueError):
        Transaction(tid("x"), 0, 0, 0, 100, (), ())  # no outputs


def test_duplicate_txid_rejected():
    txs = [
        make_tx("cb", [], [("a", 100)], 0, 0),
        make_tx("cb", [], [("b", 100)], 1, 0),
    ]
    with pytest.raises(DuplicateTxid):
        ChainView(txs)


def test_validate_well_formed_fixture_is_clean():
    chain = ChainView([
        make_tx("cb", [], [("a", 1_000)], 0, 0),
        make_tx("t1", [("cb", 0)], [("b", 900)], 1, 0),
        make_tx("t2", [("t1", 0)], [("c", 900)], 2, 0),
    ])
    report = validate_chain(chain)
    assert report.ok
    assert len(chain.outpoint_index) == 3  # one output per tx


def test_validate_reports_double_spend():
    chain = ChainView([
        make_tx("a", [], [("x", 1_000)], 0, 0),
        make_tx("b", [("a", 0)], [("y", 1_000)], 1, 0),
        make_tx("c", [("a", 0)], [("z", 1_000)], 1, 1),
    ])
    report = validate_chain(chain)
    assert not report.ok
    assert [(op.txid, op.vout) for op, _, _ in report.double_spends] == [(tid("a"), 0)]


def test_validate_reports_unresolved_input():
    chain = ChainView([
        make_tx("a", [], [("x", 1_000)], 0, 0),
        make_tx("b", [("unknown", 3)], [("y", 1_000)], 1, 0),
    ])
    report = validate_chain(chain)
    assert [(txid, op.vout) for txid, op in report.unresolved_inputs] == [(tid("b"), 3)]


def test_validate_reports_duplicate_position():
    chain = ChainView([
        make_tx("a", [], [("x", 1)], 0, 0),
        make_tx("b", [], [("y", 1)], 0, 0),
    ])
    report = validate_chain(chain)
    assert len(report.duplicate_positions) == 1


def test_temporal_order_two_blocks():
    txs = [
        make_tx("d", [], [("x", 1)], 1, 1),
        make_tx("c", [], [("x", 1)], 1, 0),
        make_tx("b", [], [("x", 1)], 0, 1),
        make_tx("a", [], [("x", 1)], 0, 0),
    ]
    chain = ChainView(txs)
    assert [t.txid for t in temporal_order(chain)] == [tid(x) for x in "abcd"]


def test_temporal_order_same_block_spend():
    chain = ChainView([
        make_tx("a", [], [("x", 100)], 0, 0),
        make_tx("b", [("a", 0)], [("y", 100)], 0, 1),
    ])
    assert [t.txid for t in temporal_order(chain)] == [tid("a"), tid("b")]


def test_temporal_order_detects_cycle():
    chain = ChainView([
        make_tx("late", [], [("x", 100)], 0, 1),
        make_tx("early", [("late", 0)], [("y", 100)], 0, 0),
    ])
    with pytest.raises(CycleDetected):
        list(temporal_order(chain))


def test_ingestion_order_is_irrelevant():
    rng = random.Random(42)
    txs = [make_tx("cb", [], [(f"w{i}", 1_000) for i in range(10)], 0, 0)]
    for i in range(1, 100):
        src = rng.randint(0, min(i, 9))
        txs.append(make_tx(f"t{i}", [], [(f"w{rng.randint(0, 20)}", 500)], i // 4 + 1, i % 4))
    shuffled = list(txs)
    rng.shuffle(shuffled)
    a, b = ChainView(txs), ChainView(shuffled)
    assert [t.txid for t in temporal_order(a)] == [t.txid for t in temporal_order(b)]
    assert [t.txid for t in temporal_order(a)] == \
        [t.txid for t in sorted(txs, key=lambda t: (t.block_height, t.tx_index))]
    assert a.first_activity == b.first_activity


def test_first_activity_lower_bounds_every_mention():
    chain = ChainView([
        make_tx("cb", [], [("a", 1_000)], 0, 0, ts=500),
        make_tx("t1", [("cb", 0)], [("a", 400), ("b", 500)], 1, 0, ts=900),
        make_tx("t2", [("t1", 1)], [("a", 450)], 2, 0, ts=700),  # skewed clock
    ])
    for tx in chain.transactions:
        for addr in chain.tx_addresses(tx):
            assert chain.first_activity[addr] <= tx.timestamp


def test_address_index_roles():
    chain = ChainView([
        make_tx("cb", [], [("a", 1_000)], 0, 0),
        make_tx("t1", [("cb", 0)], [("b", 400), ("b", 500)], 1, 0),
    ])
    assert chain.address_index["a"] == [(tid("cb"), "receiver"), (tid("t1"), "sender")]
    # b appears once per tx even with two output slots
    assert chain.address_index["b"] == [(tid("t1"), "receiver")]
