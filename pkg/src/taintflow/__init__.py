"""taintflow: taint propagation and theft-behaviour analytics for
UTXO transaction graphs.

The library models a chain of transactions, propagates "stolen coin"
taint from a seed transaction under five distribution strategies, profiles
addresses, computes behaviour metrics against control groups, and
generates synthetic scenarios with exact per-satoshi ground truth for
accuracy scoring.
"""

__version__ = "0.1.0"

from .chain import (COIN, ChainView, OutPoint, Transaction, TxOutput,
                    ValidationReport, temporal_order, tx_fee, validate_chain)
from .controls import (ControlCriteria, criteria_for_theft, relax_shape,
                       select_controls)
from .engine import (DAY_SECONDS, STRATEGIES, PropagationPolicy, TaintLedger,
                     TaintSeed, distribute_fifo, distribute_haircut,
                     distribute_lifo, distribute_poison, distribute_tiho,
                     first_distribution, propagate, read_ledger, write_ledger)
from .ingest import (CHAIN_FORMAT, LoadReport, export_dataset, load_dataset,
                     load_dataset_with_report)
from .marks import (AmountMark, FractionMark, FullMark, Mark, SegmentsMark,
                    taint_value)
from .metrics import (HYPOTHESES, HypothesisVerdict, MetricsReport,
                      compute_metrics, evaluate_hypotheses, overlap_sets)
from .profiling import (AddressProfile, classify_service_addresses,
                        profile_addresses)
from .synthgen import (BEHAVIORS, GroundTruth, ScenarioSpec, TheftSpec,
                       TrackingScore, generate, read_truth, score, write_truth)

__all__ = [
    "COIN", "DAY_SECONDS", "STRATEGIES", "HYPOTHESES", "BEHAVIORS",
    "CHAIN_FORMAT",
    "ChainView", "OutPoint", "Transaction", "TxOutput", "ValidationReport",
    "temporal_order", "tx_fee", "validate_chain",
    "LoadReport", "load_dataset", "load_dataset_with_report", "export_dataset",
    "Mark", "FullMark", "FractionMark", "SegmentsMark", "AmountMark",
    "taint_value",
    "TaintSeed", "PropagationPolicy", "TaintLedger",
    "distribute_poison", "distribute_haircut", "distribute_fifo",
    "distribute_lifo", "distribute_tiho",
    "first_distribution", "propagate", "read_ledger", "write_ledger",
    "AddressProfile", "classify_service_addresses", "profile_addresses",
    "MetricsReport", "HypothesisVerdict", "compute_metrics",
    "evaluate_hypotheses", "overlap_sets",
    "ControlCriteria", "criteria_for_theft", "relax_shape", "select_controls",
    "ScenarioSpec", "TheftSpec", "GroundTruth", "TrackingScore",
    "generate", "score", "read_truth", "write_truth",
]
