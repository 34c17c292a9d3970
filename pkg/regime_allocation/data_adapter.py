"""
Price source adapter.

The pipeline asks a `PriceClient` for each symbol's closes. Only a file-backed
client ships; a remote source plugs in by implementing `fetch` with the same
contract.
"""

import logging
from abc import ABC, abstractmethod
from datetime import date
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import pandas as pd

from .errors import MissingFile
from .market_data import SYMBOLS, PriceSeries, load_price_csv

logger = logging.getLogger(__name__)

DateLike = Union[date, str, pd.Timestamp]


class PriceClient(ABC):
    """Source of daily closes keyed by symbol."""

    @abstractmethod
    def fetch(
        self, symbol: str, start: Optional[DateLike] = None, end: Optional[DateLike] = None
    ) -> PriceSeries:
        """
        Fetches the closes of `symbol` between `start` and `end`, both inclusive.

        Args:
            symbol: Ticker, e.g. "SPY" or "VIX".
            start: First date to keep; None keeps everything before `end`.
            end: Last date to keep; None keeps everything after `start`.
        """

    def fetch_all(
        self, start: Optional[DateLike] = None, end: Optional[DateLike] = None
    ) -> Dict[str, PriceSeries]:
        return {symbol: self.fetch(symbol, start, end) for symbol in SYMBOLS}


class CsvPriceClient(PriceClient):
    """
    Reads `date,close` CSV files, one per symbol.
    """

    def __init__(self, paths: Mapping[str, Union[str, Path]]):
        self._paths = {symbol.upper(): Path(p) for symbol, p in paths.items()}

    @property
    def paths(self) -> Dict[str, Path]:
        return dict(self._paths)

    def fetch(
        self, symbol: str, start: Optional[DateLike] = None, end: Optional[DateLike] = None
    ) -> PriceSeries:
        symbol = symbol.upper()
        if symbol not in self._paths:
            raise MissingFile(f"no data file configured for symbol {symbol}")
        series = load_price_csv(self._paths[symbol], symbol)
        if start is None and end is None:
            return series
        lower = pd.Timestamp(start) if start is not None else None
        upper = pd.Timestamp(end) if end is not None else None
        closes = series.closes.loc[lower:upper]
        logger.debug("%s: kept %d of %d closes in [%s, %s]", symbol, len(closes), len(series), start, end)
        return PriceSeries(symbol, closes)


def get_price_client(configuration: Mapping[str, Any]) -> PriceClient:
    """
    Gets the price client for a run configuration.

    Args:
        configuration: Run configuration; `<symbol>_path` keys win over
            `data_dir/<symbol>.csv`.

    Returns:
        A CsvPriceClient covering TLT, GLD, SPY and VIX.
    """
    data_dir = configuration.get("data_dir")
    paths: Dict[str, Path] = {}
    for symbol in SYMBOLS:
        explicit = configuration.get(f"{symbol.lower()}_path")
        if explicit:
            paths[symbol] = Path(explicit)
        elif data_dir:
            paths[symbol] = Path(data_dir) / f"{symbol.lower()}.csv"
    return CsvPriceClient(paths)
