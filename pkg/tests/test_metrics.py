import pytest

from taintflow import (ChainView, PropagationPolicy, TaintSeed,
                       compute_metrics, evaluate_hypotheses, overlap_sets,
                       profile_addresses, propagate, tx_fee)
from taintflow.errors import EmptyControls, MixedSeeds, WindowMismatch
from taintflow.metrics import percentile_rank
from taintflow.synthgen import ScenarioSpec, TheftSpec, generate

from conftest import T0, make_tx, tid

NO_HALT = PropagationPolicy(window_days=15, service_halt=False, service_set=None)


def day_fixture():
    # three tainted txs on day 1, nothing afterwards
    txs = [
        make_tx("cb", [], [("v", 9_000)], 0, 0, ts=T0 - 100),
        make_tx("seed", [("cb", 0)], [("t0", 9_000)], 1, 0, ts=T0 - 50),
        make_tx("a", [("seed", 0)], [("t1", 4_000), ("t2", 4_900)], 2, 0, ts=T0),
        make_tx("b", [("a", 0)], [("t3", 3_950)], 3, 0, ts=T0 + 600),
        make_tx("c", [("a", 1)], [("t4", 4_850)], 3, 1, ts=T0 + 1_200),
    ]
    return ChainView(txs)


def run(chain, strategy="poison", service_set=frozenset()):
    ledger = propagate(chain, TaintSeed(tid("seed")), strategy, NO_HALT)
    profiles = profile_addresses(chain, ledger, service_set)
    return ledger, compute_metrics(chain, ledger, profiles)


def test_per_day_counts_day_one_only():
    chain = day_fixture()
    _, report = run(chain)
    assert report.per_day_tx_counts == [3] + [0] * 14
    assert sum(report.per_day_tx_counts) == report.tainted_tx_count


def test_addresses_per_tx_counts_union_of_sides():
    # two input addresses, three output addresses, one overlapping -> 4
    txs = [
        make_tx("cb", [], [("in1", 500), ("in2", 500)], 0, 0, ts=T0 - 10),
        make_tx("seed", [("cb", 0), ("cb", 1)], [("in1", 400), ("in2", 500)], 1, 0, ts=T0 - 5),
        make_tx("mix", [("seed", 0), ("seed", 1)],
                [("in1", 300), ("out2", 300), ("out3", 290)], 2, 0, ts=T0),
    ]
    chain = ChainView(txs)
    _, report = run(chain)
    assert report.addresses_per_tx == [4]
    assert report.addresses_per_tx_stats["mean"] == 4.0


def test_avg_fee_and_series():
    chain = day_fixture()
    _, report = run(chain)
    fees = [tx_fee(chain, chain.tx_by_id[tid(t)]) for t in ("a", "b", "c")]
    assert report.avg_fee_value_sat == sum(fees) / 3
    per_byte = [f / 250 for f in fees]
    assert report.fee_per_byte_series[0] == pytest.approx(sum(per_byte) / 3)
    assert report.fee_per_byte_series[1:] == [0.0] * 14


def test_window_mismatch():
    chain = day_fixture()
    ledger = propagate(chain, TaintSeed(tid("seed")), "poison", NO_HALT)
    profiles = profile_addresses(chain, ledger, frozenset())
    good = (ledger.t0, ledger.t0 + 15 * 86_400)
    compute_metrics(chain, ledger, profiles, window=good)
    with pytest.raises(WindowMismatch):
        compute_metrics(chain, ledger, profiles, window=(good[0], good[1] + 1))


def test_metrics_match_brute_force_recount():
    spec = ScenarioSpec(rng_seed=71, population=12, duration_days=12,
                        theft=TheftSpec(200_000, 1, "fifo-consistent"),
                        service_count=1, service_txs_per_day=4)
    chain, truth = generate(spec)
    ledger = propagate(chain, TaintSeed(truth.theft_txid), "fifo", NO_HALT)
    profiles = profile_addresses(chain, ledger, frozenset())
    report = compute_metrics(chain, ledger, profiles)

    expected_counts = []
    for txid in sorted(ledger.tainted_txids,
                       key=lambda t: chain.tx_by_id[t].position):
        tx = chain.tx_by_id[txid]
        addrs = set()
        for op in tx.inputs:
            addrs.add(chain.outpoint_index[op].address)
        for out in tx.outputs:
            addrs.add(out.address)
        expected_counts.append(len(addrs))
    assert report.addresses_per_tx == expected_counts
    assert report.addresses_per_tx_stats["mean"] == \
        pytest.approx(sum(expected_counts) / len(expected_counts))
    assert report.tainted_address_count == len(ledger.tainted_addresses)


def test_service_reach_units():
    txs = [
        make_tx("cb", [], [("v", 10_000)], 0, 0, ts=T0 - 10),
        make_tx("seed", [("cb", 0)], [("t0", 10_000)], 1, 0, ts=T0 - 5),
        make_tx("a", [("seed", 0)], [("svc", 7_000), ("t1", 2_900)], 2, 0, ts=T0),
        make_tx("b", [("a", 1)], [("svc", 2_800)], 3, 0, ts=T0 + 10),
    ]
    chain = ChainView(txs)
    policy = PropagationPolicy(15, True, frozenset({"svc"}))
    ledger = propagate(chain, TaintSeed(tid("seed")), "poison", policy)
    profiles = profile_addresses(chain, ledger, frozenset({"svc"}))
    report = compute_metrics(chain, ledger, profiles)
    assert report.service_reach_outpoints == 2
    assert report.service_reach_addresses == 1
    assert report.service_reach_value_sat == 7_000 + 2_800
    assert report.service_reach_count == report.service_reach_outpoints


def test_poison_haircut_reports_identical():
    chain = day_fixture()
    _, poison_report = run(chain, "poison")
    _, haircut_report = run(chain, "haircut")
    assert poison_report.per_day_tx_counts == haircut_report.per_day_tx_counts
    assert poison_report.addresses_per_tx == haircut_report.addresses_per_tx
    assert poison_report.avg_fee_value_sat == haircut_report.avg_fee_value_sat
    assert poison_report.totals() == haircut_report.totals()


def test_overlap_identical_and_brute_force():
    spec = ScenarioSpec(rng_seed=81, population=10, duration_days=12,
                        theft=TheftSpec(150_000, 2, "reorder-adversarial"),
                        service_count=1, service_txs_per_day=3)
    chain, truth = generate(spec)
    seed = TaintSeed(truth.theft_txid)
    ledgers = [propagate(chain, seed, s, NO_HALT)
               for s in ("fifo", "lifo", "tiho")]
    counts = overlap_sets(ledgers)
    sets = {led.strategy: led.tainted_txids for led in ledgers}
    names = sorted(sets)
    for subset, count in counts.items():
        expected = set.intersection(*(set(sets[n]) for n in subset))
        assert count == len(expected)
    # inclusion-exclusion sanity for the pair (fifo, lifo)
    union = len(sets["fifo"] | sets["lifo"])
    assert union == counts[("fifo",)] + counts[("lifo",)] - counts[("fifo", "lifo")]
    assert len(counts) == 2 ** len(names) - 1

    twin = overlap_sets([ledgers[0], ledgers[0]])
    assert twin[("fifo",)] == len(sets["fifo"])


def test_overlap_mixed_seeds_rejected():
    chain = day_fixture()
    a = propagate(chain, TaintSeed(tid("seed")), "poison", NO_HALT)
    b = propagate(chain, TaintSeed(tid("a")), "fifo", NO_HALT)
    with pytest.raises(MixedSeeds):
        overlap_sets([a, b])


def _report_with(value):
    chain = day_fixture()
    _, report = run(chain)
    report.avg_fee_value_sat = value
    return report


def test_percentile_rank_rules():
    assert percentile_rank(10, [1, 2, 3]) == 1.0
    assert percentile_rank(2, [1, 2, 3]) == 0.5
    assert percentile_rank(0, [1, 2, 3]) == 0.0


def test_hypothesis_verdicts():
    theft = _report_with(100.0)
    controls = [_report_with(v) for v in (10.0, 20.0, 30.0, 40.0)]
    verdicts = {v.id: v for v in evaluate_hypotheses(theft, controls)}
    h3 = verdicts["H3"]
    assert h3.theft_percentile_rank == 1.0
    assert h3.verdict == "consistent"
    assert h3.direction_expected == "higher"

    median = _report_with(30.0)
    verdicts = {v.id: v for v in evaluate_hypotheses(median, [
        _report_with(v) for v in (10.0, 20.0, 30.0, 40.0, 50.0)])}
    assert verdicts["H3"].theft_percentile_rank == 0.5
    assert verdicts["H3"].verdict == "inconclusive"

    low = _report_with(1.0)
    verdicts = {v.id: v for v in evaluate_hypotheses(low, [
        _report_with(v) for v in (10.0, 20.0, 30.0, 40.0)])}
    assert verdicts["H3"].verdict == "inconsistent"


def test_hypothesis_planted_effects_match_hand_ranks():
    theft = _report_with(35.0)
    controls = [_report_with(v) for v in (10.0, 20.0, 30.0, 40.0)]
    verdicts = {v.id: v for v in evaluate_hypotheses(theft, controls)}
    assert verdicts["H3"].theft_percentile_rank == 0.75
    assert verdicts["H3"].verdict == "consistent"
    assert len(verdicts) == 6
    for hid in ("H1", "H2", "H4", "H5", "H6"):
        assert verdicts[hid].verdict in ("consistent", "inconsistent", "inconclusive")


def test_empty_controls():
    with pytest.raises(EmptyControls):
        evaluate_hypotheses(_report_with(1.0), [])
