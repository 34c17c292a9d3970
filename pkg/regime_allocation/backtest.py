"""Lag-aware out-of-sample backtest of the regime strategies and their metrics."""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from datetime import date
from enum import Enum
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import (
    EmptySeries,
    IndexOutOfRange,
    InvalidStrategy,
    ReturnsTooShort,
    TestWindowTooShort,
    UnknownRegime,
    ZeroVolatility,
)
from .hmm import GaussianHmm, forward_filter
from .market_data import ASSETS, AlignedPanel, Observable, split_index
from .markov_chain import DiscreteStateSequence
from .regime_analysis import RotationRules
from .report import REPORT_COLUMNS, PerformanceRow
from .rl_allocator import ActionSet, PolicySolution, WeightVector, default_action_set

logger = logging.getLogger(__name__)

EQUAL_WEIGHT = WeightVector(1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
BUY_HOLD = WeightVector(0.0, 0.0, 1.0)


class Strategy(str, Enum):
    ROTATION_TOP1 = "top1"
    ROTATION_6040 = "6040"
    EQUAL_WEIGHT_MONTHLY = "ew"
    BUY_HOLD_SPY = "spy"
    RL_POLICY = "rl"

    @property
    def label(self) -> str:
        return {
            Strategy.ROTATION_TOP1: "Rotation (Top-1)",
            Strategy.ROTATION_6040: "Rotation (60/40)",
            Strategy.EQUAL_WEIGHT_MONTHLY: "Equal-Weight (Monthly)",
            Strategy.BUY_HOLD_SPY: "Buy & Hold SPY",
            Strategy.RL_POLICY: "RL policy (net)",
        }[self]


@dataclass(frozen=True, eq=False)
class StrategySpec:
    """A strategy variant and the parameters it needs."""

    variant: Strategy
    rules: Optional[RotationRules] = None
    solution: Optional[PolicySolution] = None
    actions: ActionSet = field(default_factory=default_action_set)

    def __post_init__(self) -> None:
        variant = Strategy(self.variant)
        object.__setattr__(self, "variant", variant)
        if variant in (Strategy.ROTATION_TOP1, Strategy.ROTATION_6040) and self.rules is None:
            raise InvalidStrategy(f"{variant.value} needs rotation rules")
        if variant is Strategy.RL_POLICY and self.solution is None:
            raise InvalidStrategy("rl needs a policy solution")

    @property
    def name(self) -> str:
        return self.variant.value

    @property
    def n_states(self) -> Optional[int]:
        if self.variant in (Strategy.ROTATION_TOP1, Strategy.ROTATION_6040):
            assert self.rules is not None
            return self.rules.n_states
        if self.variant is Strategy.RL_POLICY:
            assert self.solution is not None
            return len(self.solution.policy)
        return None


@dataclass(frozen=True)
class BacktestConfig:
    """Execution settings.

    Attributes:
        train_fraction: Share of the panel used for fitting; the rest is traded.
        execution_lag_days: Weights decided on day t are applied to day t + lag.
        cost_rate: Proportional cost per unit of turnover.
        trading_days_per_year: Annualization factor.
        observable: Series the regime filter runs on.
        gamma, reward_mode: Passed through to the policy solver for `rl`.
    """

    train_fraction: float = 0.7
    execution_lag_days: int = 1
    cost_rate: float = 0.0
    trading_days_per_year: int = 252
    observable: Observable = "dvix"
    gamma: float = 0.99
    reward_mode: str = "current"

    def __post_init__(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise InvalidStrategy(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.execution_lag_days < 0:
            raise InvalidStrategy(f"execution lag must be nonnegative, got {self.execution_lag_days}")
        if self.cost_rate < 0:
            raise InvalidStrategy(f"cost rate must be nonnegative, got {self.cost_rate}")
        if self.trading_days_per_year < 1:
            raise InvalidStrategy("trading_days_per_year must be positive")


@dataclass(frozen=True, eq=False)
class EquityCurve:
    """Daily test-window path of one strategy.

    Attributes:
        returns: Net daily simple returns.
        equity: Compounded from a base of 1.0 before the first test day.
        weights: Weights applied to each day's returns.
        regimes: Regime signal that set each day's weights.
        turnover: Σ |w_new − w_drifted| traded at the open of each day.
    """

    returns: pd.Series
    equity: pd.Series
    weights: pd.DataFrame
    regimes: pd.Series
    turnover: pd.Series

    @property
    def dates(self) -> pd.DatetimeIndex:
        return pd.DatetimeIndex(self.equity.index)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame(
            {"equity": self.equity.to_numpy()},
            index=pd.Index([d.date().isoformat() for d in self.dates], name="date"),
        )


def predict_regimes_realtime(
    model: GaussianHmm, observations: Sequence[float], test_start: int
) -> DiscreteStateSequence:
    """
    Real-time regime calls over the test window.

    Runs the forward filter with frozen parameters over the whole sequence and
    keeps the filtered argmax (ties to the lower state) from `test_start` on;
    no smoothed or Viterbi quantity is used, so day t's call depends on
    y_1 … y_t only.
    """
    y = np.asarray(observations, dtype=float)
    if not 0 <= test_start < y.size:
        raise IndexOutOfRange(f"test start {test_start} outside [0, {y.size})")
    regimes = np.argmax(forward_filter(model, y).filtered, axis=1)
    return DiscreteStateSequence(regimes[test_start:], model.n_states)


def target_weights(
    strategy: StrategySpec,
    regime: int,
    day: date,
    previous: Optional[WeightVector],
    previous_day: Optional[date] = None,
    n_regimes: Optional[int] = None,
) -> WeightVector:
    """
    Weights a strategy wants to hold on `day` given the lagged regime call.

    Args:
        strategy: The strategy and its parameters.
        regime: The regime signal in force.
        day: The trading day the weights apply to.
        previous: Drifted weights carried from the previous day (None at inception).
        previous_day: The previous trading day, used to detect month starts.
        n_regimes: States of the model issuing the signal. Every strategy,
            regime-blind ones included, rejects a label outside it.
    """
    bounds = [n for n in (strategy.n_states, n_regimes) if n is not None]
    bound = min(bounds) if bounds else None
    if regime < 0 or (bound is not None and regime >= bound):
        upper = bound if bound is not None else "inf"
        raise UnknownRegime(f"{strategy.name} got regime {regime}, outside [0, {upper})")
    variant = strategy.variant
    if variant is Strategy.ROTATION_TOP1:
        assert strategy.rules is not None
        return WeightVector.pure(strategy.rules.top1[regime])
    if variant is Strategy.ROTATION_6040:
        assert strategy.rules is not None
        weights = np.zeros(len(ASSETS))
        weights[ASSETS.index(strategy.rules.top1[regime])] = 0.6
        weights[ASSETS.index(strategy.rules.top2[regime])] = 0.4
        return WeightVector.from_array(weights)
    if variant is Strategy.RL_POLICY:
        assert strategy.solution is not None
        return strategy.actions[strategy.solution.policy[regime]]
    if variant is Strategy.BUY_HOLD_SPY:
        return previous if previous is not None else BUY_HOLD
    # equal weight, monthly
    if previous is None or previous_day is None:
        return EQUAL_WEIGHT
    if (day.year, day.month) != (previous_day.year, previous_day.month):
        return EQUAL_WEIGHT
    return previous


def _drift(weights: np.ndarray, simple: np.ndarray) -> np.ndarray:
    grown = weights * (1.0 + simple)
    total = grown.sum()
    return grown / total if total > 0 else weights


def _trade(
    panel: AlignedPanel,
    strategy: StrategySpec,
    model: GaussianHmm,
    start: int,
    config: BacktestConfig,
) -> Tuple[EquityCurve, PerformanceRow]:
    """Trades rows start … end with the lagged real-time regime calls of `model`."""
    n_rows = len(panel)
    lag = config.execution_lag_days
    signal_start = max(start - lag, 0)
    calls = predict_regimes_realtime(
        model, panel.observations(config.observable), signal_start
    ).states
    simple = panel.simple_returns().to_numpy()
    dates = panel.dates

    n_days = n_rows - start
    applied = np.empty((n_days, len(ASSETS)))
    signal = np.empty(n_days, dtype=np.int64)
    turnover = np.zeros(n_days)
    returns = np.empty(n_days)
    drifted: Optional[WeightVector] = None
    for i, t in enumerate(range(start, n_rows)):
        regime = int(calls[max(t - lag, 0) - signal_start])
        day = dates[t].date()
        previous_day = dates[t - 1].date() if i > 0 else None
        target = target_weights(strategy, regime, day, drifted, previous_day, model.n_states)
        w = target.as_array()
        if drifted is not None:
            turnover[i] = float(np.abs(w - drifted.as_array()).sum())
        gross = float(w @ simple[t])
        returns[i] = gross - config.cost_rate * turnover[i]
        applied[i] = w
        signal[i] = regime
        drifted = WeightVector.from_array(_drift(w, simple[t]))

    index = dates[start:]
    daily = pd.Series(returns, index=index, name=strategy.name)
    curve = EquityCurve(
        returns=daily,
        equity=(1.0 + daily).cumprod().rename(strategy.name),
        weights=pd.DataFrame(applied, index=index, columns=list(ASSETS)),
        regimes=pd.Series(signal, index=index, name="regime"),
        turnover=pd.Series(turnover, index=index, name="turnover"),
    )
    row = summarize(strategy.name, daily, config.trading_days_per_year)
    logger.info(
        "%s from %s: cumulative %.4f annualized %.4f sharpe %s max drawdown %.4f",
        strategy.name,
        dates[start].date(),
        row.cumulative,
        row.annualized,
        f"{row.sharpe:.3f}" if math.isfinite(row.sharpe) else "n/a",
        row.max_drawdown,
    )
    return curve, row


def run_backtest(
    panel: AlignedPanel,
    strategy: StrategySpec,
    model: GaussianHmm,
    config: Optional[BacktestConfig] = None,
) -> Tuple[EquityCurve, PerformanceRow]:
    """
    Trades a strategy over the test window of a chronologically split panel.

    Args:
        panel: The full panel; rows before the split are the training prefix.
        strategy: What to trade.
        model: HMM fitted on the training prefix only.
        config: Split, lag, cost and annualization settings.

    Returns:
        The equity curve and its performance row.
    """
    config = config or BacktestConfig()
    n_rows = len(panel)
    test_start = split_index(n_rows, config.train_fraction)
    if n_rows - test_start < 2 or test_start < 1:
        raise TestWindowTooShort(
            f"{n_rows} rows with train_fraction {config.train_fraction} leave "
            f"{n_rows - test_start} test days; need at least 2"
        )
    return _trade(panel, strategy, model, test_start, config)


def run_full_sample(
    panel: AlignedPanel,
    strategy: StrategySpec,
    model: GaussianHmm,
    config: Optional[BacktestConfig] = None,
) -> Tuple[EquityCurve, PerformanceRow]:
    """
    Trades a strategy over the whole panel with full-sample parameters.

    The first `execution_lag_days` rows only feed the signal. This is an
    in-sample reading of the strategies: `model` and the rotation rules were
    fitted on the very rows being traded. The train fraction is ignored.
    """
    config = config or BacktestConfig()
    start = config.execution_lag_days
    if len(panel) - start < 2:
        raise TestWindowTooShort(
            f"{len(panel)} rows with lag {start} leave {len(panel) - start} trading days; "
            "need at least 2"
        )
    return _trade(panel, strategy, model, start, config)


def run_all(
    panel: AlignedPanel,
    strategies: Sequence[StrategySpec],
    model: GaussianHmm,
    config: Optional[BacktestConfig] = None,
    max_workers: int = 1,
    runner: Callable[..., Tuple[EquityCurve, PerformanceRow]] = run_backtest,
) -> List[Tuple[EquityCurve, PerformanceRow]]:
    """Runs independent strategies, concurrently when `max_workers > 1`; results keep input order."""
    if max_workers > 1 and len(strategies) > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            return list(pool.map(lambda s: runner(panel, s, model, config), strategies))
    return [runner(panel, s, model, config) for s in strategies]


def cost_sensitivity(
    panel: AlignedPanel,
    strategies: Sequence[StrategySpec],
    model: GaussianHmm,
    cost_rates: Sequence[float],
    config: Optional[BacktestConfig] = None,
) -> pd.DataFrame:
    """Test-window performance of each strategy across a grid of proportional cost rates."""
    config = config or BacktestConfig()
    rows: List[Dict[str, Any]] = []
    for rate in cost_rates:
        if rate < 0:
            raise InvalidStrategy(f"cost rate must be nonnegative, got {rate}")
        for strategy in strategies:
            _, row = run_backtest(panel, strategy, model, replace(config, cost_rate=float(rate)))
            rows.append({"cost_rate": float(rate), **row.to_dict()})
    return pd.DataFrame(rows, columns=["cost_rate", *REPORT_COLUMNS])


def summarize(name: str, returns: pd.Series, trading_days_per_year: int = 252) -> PerformanceRow:
    values = returns.to_numpy(dtype=float)
    ann = annualized_return(values, trading_days_per_year)
    vol = annualized_volatility(values, trading_days_per_year)
    try:
        ratio = sharpe(ann, vol)
    except ZeroVolatility:
        logger.warning("%s has zero volatility; Sharpe is undefined", name)
        ratio = float("nan")
    equity = np.concatenate(([1.0], np.cumprod(1.0 + values)))
    return PerformanceRow(
        strategy=name,
        cumulative=cumulative_return(values),
        annualized=ann,
        volatility=vol,
        sharpe=ratio,
        max_drawdown=max_drawdown(equity),
    )


def cumulative_return(returns: Sequence[float]) -> float:
    """Π(1 + r_t) − 1."""
    return float(np.prod(1.0 + np.asarray(returns, dtype=float)) - 1.0)


def annualized_return(returns: Sequence[float], trading_days_per_year: int = 252) -> float:
    """Geometric: (final equity)^(days per year / T) − 1."""
    r = np.asarray(returns, dtype=float)
    if r.size == 0:
        raise EmptySeries("cannot annualize an empty return series")
    final = float(np.prod(1.0 + r))
    if final <= 0:
        return -1.0
    return float(final ** (trading_days_per_year / r.size) - 1.0)


def annualized_volatility(returns: Sequence[float], trading_days_per_year: int = 252) -> float:
    """Sample standard deviation × √(days per year)."""
    r = np.asarray(returns, dtype=float)
    if r.size < 2:
        raise ReturnsTooShort(f"need at least 2 returns for a volatility, got {r.size}")
    return float(r.std(ddof=1) * math.sqrt(trading_days_per_year))


def sharpe(annualized: float, volatility: float) -> float:
    """Annualized return over annualized volatility (risk-free rate 0)."""
    if not volatility > 0:
        raise ZeroVolatility("Sharpe ratio is undefined at zero volatility")
    return annualized / volatility


def max_drawdown(equity: Sequence[float]) -> float:
    """min_t (equity_t / running max − 1), a nonpositive fraction."""
    e = np.asarray(equity, dtype=float)
    if e.size == 0:
        raise EmptySeries("cannot compute the drawdown of an empty equity curve")
    peaks = np.maximum.accumulate(e)
    return float(min(0.0, np.min(e / peaks - 1.0)))
