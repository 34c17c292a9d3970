"""Exception hierarchy shared by every stage of the allocation pipeline.

Each concrete error names the module it belongs to and a short code, so the
CLI can render a single machine-parseable line and map it onto an exit status.
"""

from typing import ClassVar


class RegimeAllocationError(ValueError):
    """Base class for all errors raised by the library."""

    module: ClassVar[str] = "regime_allocation"
    exit_code: ClassVar[int] = 3

    @property
    def code(self) -> str:
        return type(self).__name__


class UsageError(RegimeAllocationError):
    exit_code = 1


class DataError(RegimeAllocationError):
    exit_code = 2


class NumericalError(RegimeAllocationError):
    exit_code = 3


def format_error(exc: BaseException) -> str:
    """Render `ERROR <module>:<code>: <message>` for the CLI."""
    if isinstance(exc, RegimeAllocationError):
        module, code = exc.module, exc.code
    else:
        module, code = "cli_app", "Internal"
    message = " ".join(str(exc).split()) or type(exc).__name__
    return f"ERROR {module}:{code}: {message}"


# market_data


class MarketDataError(DataError):
    module = "market_data"


class MissingFile(MarketDataError):
    pass


class EmptyFile(MarketDataError):
    pass


class MalformedRow(MarketDataError):
    pass


class NonPositivePrice(MarketDataError):
    pass


class DuplicateDate(MarketDataError):
    pass


class TooShort(MarketDataError):
    pass


class InsufficientOverlap(MarketDataError):
    pass


class WindowTooLarge(MarketDataError):
    pass


class DegenerateColumn(MarketDataError):
    pass


class EmptySegment(MarketDataError):
    pass


# markov_chain


class MarkovChainError(NumericalError):
    module = "markov_chain"


class TooFewValues(MarkovChainError):
    exit_code = 2


class SequenceTooShort(MarkovChainError):
    exit_code = 2

    @property
    def code(self) -> str:
        return "TooShort"


class InvalidTransitionMatrix(MarkovChainError):
    pass


class InvalidState(MarkovChainError):
    exit_code = 2


class NoConvergence(MarkovChainError):
    pass


# hmm


class HmmError(NumericalError):
    module = "hmm"


class InvalidModel(HmmError):
    pass


class NonFiniteObservation(HmmError):
    exit_code = 2


class NumericalUnderflow(HmmError):
    pass


class TooFewObservations(HmmError):
    exit_code = 2


class AllRestartsDegenerate(HmmError):
    pass


class NoCandidates(HmmError):
    exit_code = 1


# regime_analysis


class RegimeAnalysisError(DataError):
    module = "regime_analysis"


class LengthMismatch(RegimeAnalysisError):
    pass


class AbsentState(RegimeAnalysisError):
    pass


# rl_allocator


class RlAllocatorError(NumericalError):
    module = "rl_allocator"


class InvalidAction(RlAllocatorError):
    exit_code = 1


class SingularSystem(RlAllocatorError):
    pass


class RewardAbsentState(RlAllocatorError):
    exit_code = 2

    @property
    def code(self) -> str:
        return "AbsentState"


# backtest


class BacktestError(NumericalError):
    module = "backtest"


class InvalidStrategy(BacktestError):
    exit_code = 1


class UnknownRegime(BacktestError):
    pass


class IndexOutOfRange(BacktestError):
    exit_code = 1


class TestWindowTooShort(BacktestError):
    exit_code = 2
    __test__ = False


class EmptySeries(BacktestError):
    pass


class ReturnsTooShort(BacktestError):
    @property
    def code(self) -> str:
        return "TooShort"


class ZeroVolatility(BacktestError):
    pass


# cli_app


class CliError(UsageError):
    module = "cli_app"


class UnknownConfigKey(CliError):
    pass


class InvalidConfigValue(CliError):
    pass


class UnknownFigure(CliError):
    pass


class MissingPrerequisite(CliError):
    exit_code = 2


class InvalidArguments(CliError):
    pass
