"""Daily price ingestion, date alignment and the descriptive return panel."""

import logging
import math
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Dict, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .errors import (
    DegenerateColumn,
    DuplicateDate,
    EmptyFile,
    EmptySegment,
    InsufficientOverlap,
    MalformedRow,
    MissingFile,
    NonPositivePrice,
    TooShort,
    WindowTooLarge,
)

logger = logging.getLogger(__name__)

ASSETS: Tuple[str, ...] = ("TLT", "GLD", "SPY")
SYMBOLS: Tuple[str, ...] = (*ASSETS, "VIX")

Observable = Literal["dvix", "spy_logret"]

PANEL_COLUMNS = {"TLT": "tlt_ret", "GLD": "gld_ret", "SPY": "spy_ret"}

# Named windows for the stress-event volatility view.
STRESS_EVENTS: Tuple[Tuple[str, str, str], ...] = (
    ("gfc_2008", "2008-09-01", "2009-06-30"),
    ("downgrade_2011", "2011-07-15", "2011-12-31"),
    ("china_2015", "2015-08-01", "2016-02-29"),
    ("selloff_2018", "2018-10-01", "2018-12-31"),
    ("covid_2020", "2020-02-15", "2020-06-30"),
    ("rates_2022", "2022-01-01", "2022-12-31"),
)

PathLike = Union[str, Path]


@dataclass(frozen=True, eq=False)
class PriceSeries:
    """Closing prices (or index levels) of one symbol, keyed by trading day."""

    symbol: str
    closes: pd.Series

    def __post_init__(self) -> None:
        closes = self.closes
        if not isinstance(closes.index, pd.DatetimeIndex):
            raise MalformedRow(f"{self.symbol}: closes must be indexed by dates")
        if closes.index.has_duplicates:
            dup = closes.index[closes.index.duplicated()][0]
            raise DuplicateDate(f"{self.symbol}: duplicate date {dup.date().isoformat()}")
        if not closes.index.is_monotonic_increasing:
            closes = closes.sort_index()
        values = closes.to_numpy(dtype=float)
        if not np.all(np.isfinite(values)):
            raise MalformedRow(f"{self.symbol}: non-finite close")
        if np.any(values <= 0):
            bad = closes.index[values <= 0][0]
            raise NonPositivePrice(
                f"{self.symbol}: close {closes[bad]} on {bad.date().isoformat()} is not positive"
            )
        closes = closes.astype(float).rename(self.symbol).rename_axis("date")
        object.__setattr__(self, "closes", closes)

    def __len__(self) -> int:
        return len(self.closes)

    @property
    def dates(self) -> pd.DatetimeIndex:
        return pd.DatetimeIndex(self.closes.index)

    @classmethod
    def from_pairs(cls, symbol: str, rows: Sequence[Tuple[Union[date, str], float]]) -> "PriceSeries":
        index = pd.DatetimeIndex([pd.Timestamp(d) for d, _ in rows], name="date")
        return cls(symbol, pd.Series([float(c) for _, c in rows], index=index))


@dataclass(frozen=True, eq=False)
class AlignedPanel:
    """Date-aligned daily log-returns of TLT/GLD/SPY plus VIX changes.

    Attributes:
        log_returns: DataFrame indexed by date with one column per asset in `ASSETS`.
        delta_vix: Day-over-day VIX level change, in index points.
        vix_log_return: Optional daily log-return of the VIX level.
    """

    log_returns: pd.DataFrame
    delta_vix: pd.Series
    vix_log_return: Optional[pd.Series] = None

    def __post_init__(self) -> None:
        if list(self.log_returns.columns) != list(ASSETS):
            raise MalformedRow(f"panel columns must be {list(ASSETS)}")
        index = self.log_returns.index
        if not index.equals(self.delta_vix.index):
            raise MalformedRow("delta_vix is not aligned with the return columns")
        if self.vix_log_return is not None and not index.equals(self.vix_log_return.index):
            raise MalformedRow("vix_log_return is not aligned with the return columns")
        if not index.is_monotonic_increasing or index.has_duplicates:
            raise DuplicateDate("panel dates must be strictly increasing")

    def __len__(self) -> int:
        return len(self.log_returns)

    @property
    def dates(self) -> pd.DatetimeIndex:
        return pd.DatetimeIndex(self.log_returns.index)

    def observations(self, observable: Observable = "dvix") -> np.ndarray:
        """The univariate series the regime model is fitted on."""
        if observable == "dvix":
            return self.delta_vix.to_numpy(dtype=float)
        if observable == "spy_logret":
            return self.log_returns["SPY"].to_numpy(dtype=float)
        raise ValueError(f"Unknown observable: {observable}")

    def simple_returns(self) -> pd.DataFrame:
        return np.expm1(self.log_returns)

    def slice(self, start: int, stop: int) -> "AlignedPanel":
        vix_lr = None if self.vix_log_return is None else self.vix_log_return.iloc[start:stop]
        return AlignedPanel(
            self.log_returns.iloc[start:stop],
            self.delta_vix.iloc[start:stop],
            vix_lr,
        )

    def to_frame(self) -> pd.DataFrame:
        frame = self.log_returns.rename(columns=PANEL_COLUMNS)
        frame["dvix"] = self.delta_vix
        if self.vix_log_return is not None:
            frame["vix_logret"] = self.vix_log_return
        frame.index = pd.Index([d.date().isoformat() for d in self.dates], name="date")
        return frame


def load_price_csv(path: PathLike, symbol: Optional[str] = None) -> PriceSeries:
    """
    Reads a two-column `date,close` CSV into a PriceSeries.

    Args:
        path: The CSV file.
        symbol: Ticker to attach. Defaults to the file stem upper-cased.

    Returns:
        The parsed series, sorted by date.
    """
    path = Path(path)
    symbol = symbol or path.stem.upper()
    if not path.is_file():
        raise MissingFile(f"data file not found: {path}")
    try:
        raw = pd.read_csv(path, dtype=str, encoding="utf-8", skip_blank_lines=True)
    except pd.errors.EmptyDataError as e:
        raise EmptyFile(f"{path} is empty") from e
    except pd.errors.ParserError as e:
        raise MalformedRow(f"{path}: {e}") from e
    except UnicodeDecodeError as e:
        raise MalformedRow(f"{path}: not UTF-8 text at byte {e.start}: {e.reason}") from e
    raw.columns = [c.strip().lower() for c in raw.columns]
    if list(raw.columns) != ["date", "close"]:
        raise MalformedRow(f"{path}: expected header 'date,close', found {','.join(raw.columns)}")
    if raw.empty:
        raise EmptyFile(f"{path} has a header but no rows")

    dates = pd.to_datetime(raw["date"].str.strip(), format="%Y-%m-%d", errors="coerce")
    closes = pd.to_numeric(raw["close"].str.strip(), errors="coerce")
    bad = dates.isna() | ~np.isfinite(closes)
    if bad.any():
        row = int(np.flatnonzero(bad.to_numpy())[0])
        raise MalformedRow(
            f"{path}: cannot parse row {row + 2}: "
            f"{raw['date'].iloc[row]!r},{raw['close'].iloc[row]!r}"
        )
    series = pd.Series(closes.to_numpy(dtype=float), index=pd.DatetimeIndex(dates, name="date"))
    return PriceSeries(symbol, series)


def write_price_csv(series: PriceSeries, path: PathLike) -> None:
    frame = pd.DataFrame(
        {"close": series.closes.to_numpy()},
        index=pd.Index([d.date().isoformat() for d in series.dates], name="date"),
    )
    frame.to_csv(path, float_format="%.12g", lineterminator="\n")


def log_returns(series: PriceSeries) -> pd.Series:
    """r_t = ln(P_t / P_{t-1}), keyed by the later date."""
    if len(series) < 2:
        raise TooShort(f"{series.symbol}: need at least 2 closes, got {len(series)}")
    closes = series.closes.to_numpy()
    return pd.Series(np.log(closes[1:] / closes[:-1]), index=series.dates[1:], name=series.symbol)


def delta_vix(series: PriceSeries) -> pd.Series:
    """ΔVIX_t = VIX_t − VIX_{t−1}, keyed by the later date."""
    if len(series) < 2:
        raise TooShort(f"{series.symbol}: need at least 2 levels, got {len(series)}")
    levels = series.closes.to_numpy()
    return pd.Series(np.diff(levels), index=series.dates[1:], name=series.symbol)


def build_panel(
    tlt: PriceSeries, gld: PriceSeries, spy: PriceSeries, vix: PriceSeries
) -> AlignedPanel:
    """
    Aligns the four series on the strict intersection of their dates and
    computes returns between consecutive surviving dates.
    """
    inputs: Dict[str, PriceSeries] = {"TLT": tlt, "GLD": gld, "SPY": spy, "VIX": vix}
    for name, series in inputs.items():
        if len(series) < 2:
            raise TooShort(f"{name}: need at least 2 closes, got {len(series)}")

    common = tlt.dates
    for series in (gld, spy, vix):
        common = common.intersection(series.dates)
    common = common.sort_values()
    if len(common) < 2:
        raise InsufficientOverlap(
            f"only {len(common)} common date(s) across {', '.join(inputs)}; need at least 2"
        )
    dropped = {name: len(s) - len(common) for name, s in inputs.items() if len(s) > len(common)}
    if dropped:
        logger.info("Alignment dropped rows outside the common calendar: %s", dropped)

    aligned = {name: PriceSeries(name, s.closes.reindex(common)) for name, s in inputs.items()}
    returns = pd.DataFrame({asset: log_returns(aligned[asset]) for asset in ASSETS})
    returns.index.name = "date"
    dvix = delta_vix(aligned["VIX"]).rename("dvix")
    vix_lr = log_returns(aligned["VIX"]).rename("vix_logret")
    return AlignedPanel(returns, dvix, vix_lr)


def load_panel_csv(path: PathLike) -> AlignedPanel:
    """Reads a `panel.csv` artifact back into an aligned panel."""
    path = Path(path)
    if not path.is_file():
        raise MissingFile(f"panel file not found: {path}")
    frame = pd.read_csv(path)
    expected = ["date", *PANEL_COLUMNS.values(), "dvix"]
    if list(frame.columns[: len(expected)]) != expected:
        raise MalformedRow(f"{path}: expected header starting {','.join(expected)}")
    index = pd.DatetimeIndex(pd.to_datetime(frame["date"], format="%Y-%m-%d"), name="date")
    returns = pd.DataFrame(
        {asset: frame[col].to_numpy(dtype=float) for asset, col in PANEL_COLUMNS.items()},
        index=index,
    )
    dvix = pd.Series(frame["dvix"].to_numpy(dtype=float), index=index, name="dvix")
    vix_lr = None
    if "vix_logret" in frame.columns:
        vix_lr = pd.Series(frame["vix_logret"].to_numpy(dtype=float), index=index, name="vix_logret")
    return AlignedPanel(returns, dvix, vix_lr)


def rolling_volatility(returns: pd.Series, window: int) -> pd.Series:
    """Trailing sample standard deviation, reported only where a full window exists."""
    if window < 2:
        raise WindowTooLarge(f"window must be at least 2, got {window}")
    if len(returns) < window:
        raise WindowTooLarge(f"window {window} exceeds series length {len(returns)}")
    vol = returns.rolling(window=window, min_periods=window).std(ddof=1)
    return vol.iloc[window - 1 :].clip(lower=0.0)


def correlation_matrix(panel: AlignedPanel) -> pd.DataFrame:
    """Pearson correlation of the three asset return columns."""
    if len(panel) < 2:
        raise TooShort(f"need at least 2 rows for correlations, got {len(panel)}")
    values = panel.log_returns.to_numpy(dtype=float)
    stds = values.std(axis=0, ddof=1)
    for asset, sd in zip(ASSETS, stds):
        if not sd > 0:
            raise DegenerateColumn(f"{asset} returns have zero variance")
    corr = np.corrcoef(values, rowvar=False)
    corr = np.clip((corr + corr.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(corr, 1.0)
    return pd.DataFrame(corr, index=list(ASSETS), columns=list(ASSETS))


def chronological_split(
    panel: AlignedPanel, train_fraction: float
) -> Tuple[AlignedPanel, AlignedPanel]:
    """Splits into the first ⌊fraction·T⌋ rows and the remainder, without shuffling."""
    if not 0.0 < train_fraction < 1.0:
        raise EmptySegment(f"train_fraction must lie in (0, 1), got {train_fraction}")
    n_train = split_index(len(panel), train_fraction)
    if n_train == 0 or n_train == len(panel):
        raise EmptySegment(
            f"train_fraction {train_fraction} on {len(panel)} rows leaves an empty segment"
        )
    return panel.slice(0, n_train), panel.slice(n_train, len(panel))


def split_index(n_rows: int, train_fraction: float) -> int:
    # round() first so that e.g. 0.7 * 100 floors to 70 despite binary representation
    return int(math.floor(round(train_fraction * n_rows, 9)))


def stress_event_volatility(
    returns: pd.Series,
    window: int = 30,
    events: Sequence[Tuple[str, str, str]] = STRESS_EVENTS,
) -> pd.DataFrame:
    """
    Rolling volatility restricted to named stress windows.

    Returns:
        Long frame with columns `date`, `event`, `volatility`; events outside the
        sample are omitted.
    """
    vol = rolling_volatility(returns, window)
    frames = []
    for name, start, end in events:
        part = vol.loc[pd.Timestamp(start) : pd.Timestamp(end)]
        if part.empty:
            continue
        frames.append(
            pd.DataFrame({"date": part.index, "event": name, "volatility": part.to_numpy()})
        )
    if not frames:
        return pd.DataFrame(columns=["date", "event", "volatility"])
    return pd.concat(frames, ignore_index=True)
