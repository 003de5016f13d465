"""Exception types shared across the package."""


class TaintflowError(Exception):
    """Base class for every error raised by taintflow."""


class UnresolvedInput(TaintflowError):
    """An input references an outpoint that does not exist in the chain."""


class NegativeFee(TaintflowError):
    """Transaction outputs exceed inputs; the data is corrupt."""


class CycleDetected(TaintflowError):
    """A spender precedes the transaction it spends in chain order."""


class DuplicateTxid(TaintflowError):
    """Two transactions share the same txid."""


class ParseError(TaintflowError):
    """A dataset line could not be parsed. Carries the 1-based line number."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class IndexBuildError(TaintflowError):
    """Strict load failed because the chain did not validate."""

    def __init__(self, report):
        super().__init__(f"chain failed validation: {report.summary()}")
        self.report = report


class ValueMismatch(TaintflowError):
    """Input, output and fee totals of a transaction do not balance."""


class ZeroInputValue(TaintflowError):
    """Proportional distribution is undefined when inputs total zero."""


class UnknownStrategy(TaintflowError):
    """Strategy name is not one of the five supported strategies."""


class SeedNotFound(TaintflowError):
    """Seed txid (or one of its output indices) does not exist."""


class MissingServiceSet(TaintflowError):
    """Halting was requested but no service address set was supplied."""


class EmptyWindow(TaintflowError):
    """The requested time window contains no transactions."""


class WindowMismatch(TaintflowError):
    """Ledger and requested window disagree."""


class MixedSeeds(TaintflowError):
    """Set operations require ledgers propagated from the same seed."""


class EmptyControls(TaintflowError):
    """Hypothesis evaluation needs at least one control report."""


class ScenarioError(TaintflowError):
    """A synthetic scenario description is invalid."""


class ChainMismatch(TaintflowError):
    """Ledger and ground truth come from different chains."""
