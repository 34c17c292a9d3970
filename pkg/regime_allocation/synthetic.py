"""Seeded synthetic TLT/GLD/SPY/VIX closes drawn from published regime parameters.

A hidden regime path follows the three-state volatility transition matrix;
ΔVIX and the asset log-returns are Gaussian given the regime. Used for
fixtures and the `make-fixture` command.
"""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

import numpy as np
import pandas as pd

from .market_data import ASSETS, PriceSeries, write_price_csv
from .markov_chain import DiscreteStateSequence, TransitionMatrix, simulate_chain

logger = logging.getLogger(__name__)

# calm, transitional, crisis
REGIME_TRANSITION = (
    (0.9386, 0.0614, 0.0),
    (0.0726, 0.9093, 0.0181),
    (0.0001, 0.1260, 0.8740),
)
DVIX_MEANS = (-0.0606, -0.0146, 0.6120)
DVIX_STDS = (0.6076, 1.7132, 5.9255)

# rows are regimes, columns follow ASSETS (TLT, GLD, SPY)
ASSET_MEANS = (
    (-0.000119, 0.000458, 0.001295),
    (0.000228, 0.000335, 0.000014),
    (0.001673, 0.000476, -0.004749),
)
ASSET_STDS = (
    (0.007456, 0.009375, 0.005511),
    (0.009656, 0.011445, 0.012092),
    (0.017325, 0.020023, 0.033809),
)
OCCUPANCY = (0.5083, 0.4298, 0.0618)

START_DATE = "2010-01-04"
VIX_FLOOR = 10.0


@dataclass(frozen=True, eq=False)
class SyntheticMarket:
    """Generated closes plus the regime path that produced each return day."""

    prices: Dict[str, PriceSeries]
    regimes: DiscreteStateSequence

    def write_csvs(self, directory: Union[str, Path]) -> Dict[str, Path]:
        """Writes `<symbol>.csv` files in `date,close` format and returns their paths."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        paths = {}
        for symbol, series in self.prices.items():
            path = directory / f"{symbol.lower()}.csv"
            write_price_csv(series, path)
            paths[symbol] = path
        return paths


def regime_transition() -> TransitionMatrix:
    return TransitionMatrix.from_rounded(REGIME_TRANSITION)


def generate_market(
    n_days: int,
    seed: int = 0,
    start: str = START_DATE,
    transition: Optional[TransitionMatrix] = None,
) -> SyntheticMarket:
    """
    Simulates `n_days` closes per symbol (so `n_days − 1` return days).

    Args:
        n_days: Price rows per symbol, at least 2.
        seed: Seed of the single generator every draw comes from.
        start: First business day.
        transition: Regime dynamics; defaults to the published three-state matrix.

    Returns:
        The four price series on a shared business-day calendar.
    """
    if n_days < 2:
        raise ValueError(f"n_days must be at least 2, got {n_days}")
    rng = np.random.default_rng(seed)
    transition = transition or regime_transition()
    n_returns = n_days - 1
    path = simulate_chain(transition, n_returns, initial_state=0, rng=rng)
    states = path.states

    dvix = rng.normal(np.asarray(DVIX_MEANS)[states], np.asarray(DVIX_STDS)[states])
    level = np.concatenate(([0.0], np.cumsum(dvix)))
    vix = level - level.min() + VIX_FLOOR

    means = np.asarray(ASSET_MEANS)[states]
    stds = np.asarray(ASSET_STDS)[states]
    log_returns = rng.normal(means, stds)
    closes = 100.0 * np.exp(np.vstack([np.zeros(len(ASSETS)), np.cumsum(log_returns, axis=0)]))

    dates = pd.bdate_range(start=start, periods=n_days, name="date")
    prices = {
        asset: PriceSeries(asset, pd.Series(closes[:, i], index=dates))
        for i, asset in enumerate(ASSETS)
    }
    prices["VIX"] = PriceSeries("VIX", pd.Series(vix, index=dates))
    counts = np.bincount(states, minlength=transition.n_states)
    logger.info("Generated %d days; regime counts %s", n_days, counts.tolist())
    return SyntheticMarket(prices, path)


def write_fixture(directory: Union[str, Path], n_days: int = 200, seed: int = 0) -> Dict[str, Path]:
    """Generates a market and writes its four CSV files into `directory`."""
    return generate_market(n_days, seed).write_csvs(directory)

