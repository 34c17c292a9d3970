"""
Long-format plot data (date, series, value) behind each report figure.

Every figure is rebuilt from the artifacts a previous run left in the output
directory; nothing is refitted. Static figures leave `date` empty.
"""

import json
import logging
from pathlib import Path
from typing import Callable, Dict, List, Tuple, Union

import pandas as pd

from .errors import MissingPrerequisite, UnknownFigure
from .hmm import GaussianHmm, backward_smooth, forward_filter, viterbi
from .market_data import (
    ASSETS,
    AlignedPanel,
    correlation_matrix,
    load_panel_csv,
    rolling_volatility,
    stress_event_volatility,
)
from .regime_analysis import RegimeStats

logger = logging.getLogger(__name__)

PLOT_COLUMNS = ["date", "series", "value"]
FIGURES = tuple(range(1, 12))
COMPARISON_STRATEGIES = ("rl", "top1", "6040")


def _require(out_dir: Path, name: str) -> Path:
    path = out_dir / name
    if not path.is_file():
        raise MissingPrerequisite(f"{path} is missing; run the stage that writes it first")
    return path


def _iso(index: pd.Index) -> List[str]:
    return [pd.Timestamp(d).date().isoformat() for d in index]


def _long(frame: pd.DataFrame) -> pd.DataFrame:
    """Melts a date-indexed wide frame into (date, series, value)."""
    wide = frame.copy()
    wide.index = pd.Index(_iso(wide.index), name="date")
    melted = wide.reset_index().melt(id_vars="date", var_name="series", value_name="value")
    return melted[PLOT_COLUMNS]


def _panel(out_dir: Path) -> AlignedPanel:
    return load_panel_csv(_require(out_dir, "panel.csv"))


def _model(out_dir: Path) -> Tuple[GaussianHmm, str]:
    payload = json.loads(_require(out_dir, "hmm.json").read_text(encoding="utf-8"))
    return GaussianHmm.from_dict(payload), payload.get("observable", "dvix")


def log_return_series(out_dir: Path, window: int) -> pd.DataFrame:
    return _long(_panel(out_dir).log_returns)


def rolling_volatility_series(out_dir: Path, window: int) -> pd.DataFrame:
    returns = _panel(out_dir).log_returns
    return _long(pd.DataFrame({a: rolling_volatility(returns[a], window) for a in ASSETS}))


def correlation_cells(out_dir: Path, window: int) -> pd.DataFrame:
    corr = correlation_matrix(_panel(out_dir))
    rows = [
        {"date": "", "series": f"{a}|{b}", "value": corr.loc[a, b]} for a in ASSETS for b in ASSETS
    ]
    return pd.DataFrame(rows, columns=PLOT_COLUMNS)


def stress_event_series(out_dir: Path, window: int) -> pd.DataFrame:
    events = stress_event_volatility(_panel(out_dir).log_returns["SPY"], window)
    return pd.DataFrame(
        {
            "date": _iso(pd.DatetimeIndex(events["date"])),
            "series": events["event"].to_numpy(),
            "value": events["volatility"].to_numpy(),
        },
        columns=PLOT_COLUMNS,
    )


def delta_vix_series(out_dir: Path, window: int) -> pd.DataFrame:
    return _long(_panel(out_dir).delta_vix.to_frame("dvix"))


def vix_log_return_series(out_dir: Path, window: int) -> pd.DataFrame:
    panel = _panel(out_dir)
    if panel.vix_log_return is None:
        raise MissingPrerequisite("panel.csv has no vix_logret column")
    return _long(panel.vix_log_return.to_frame("vix_logret"))


def viterbi_series(out_dir: Path, window: int) -> pd.DataFrame:
    panel = _panel(out_dir)
    model, observable = _model(out_dir)
    observations = panel.observations(observable)
    path = viterbi(model, observations)
    frame = pd.DataFrame(
        {observable: observations, "state": path.states.astype(float)}, index=panel.dates
    )
    return _long(frame)


def smoothed_probability_series(out_dir: Path, window: int) -> pd.DataFrame:
    panel = _panel(out_dir)
    model, observable = _model(out_dir)
    observations = panel.observations(observable)
    smoothed = backward_smooth(model, forward_filter(model, observations)).smoothed
    columns = [f"state_{s}" for s in range(model.n_states)]
    return _long(pd.DataFrame(smoothed, index=panel.dates, columns=columns))


def regime_stat_cells(out_dir: Path, window: int) -> pd.DataFrame:
    stats = RegimeStats.from_frame(pd.read_csv(_require(out_dir, "regime_stats.csv")))
    rows = []
    for state in range(stats.n_states):
        for asset in ASSETS:
            for name, table in (("mean", stats.cond_mean), ("std", stats.cond_std)):
                rows.append(
                    {
                        "date": "",
                        "series": f"state_{state}:{asset}:{name}",
                        "value": table.loc[state, asset],
                    }
                )
    return pd.DataFrame(rows, columns=PLOT_COLUMNS)


def _equity(out_dir: Path, strategies: List[str]) -> pd.DataFrame:
    frames = []
    for name in strategies:
        curve = pd.read_csv(_require(out_dir, f"equity_{name}.csv"))
        frames.append(
            pd.DataFrame({"date": curve["date"], "series": name, "value": curve["equity"]})
        )
    return pd.concat(frames, ignore_index=True)[PLOT_COLUMNS]


def equity_series(out_dir: Path, window: int) -> pd.DataFrame:
    report = pd.read_csv(_require(out_dir, "backtest_report.csv"), dtype={"strategy": str})
    return _equity(out_dir, list(report["strategy"]))


def comparison_equity_series(out_dir: Path, window: int) -> pd.DataFrame:
    report = pd.read_csv(_require(out_dir, "backtest_report.csv"), dtype={"strategy": str})
    present = set(report["strategy"])
    return _equity(out_dir, [s for s in COMPARISON_STRATEGIES if s in present])


FIGURE_BUILDERS: Dict[int, Callable[[Path, int], pd.DataFrame]] = {
    1: log_return_series,
    2: rolling_volatility_series,
    3: correlation_cells,
    4: stress_event_series,
    5: delta_vix_series,
    6: vix_log_return_series,
    7: viterbi_series,
    8: smoothed_probability_series,
    9: regime_stat_cells,
    10: equity_series,
    11: comparison_equity_series,
}


def figure_data(figure: int, out_dir: Union[str, Path], window: int = 30) -> pd.DataFrame:
    """
    Plot data for one figure.

    Args:
        figure: Figure id, 1 to 11.
        out_dir: Directory holding a previous run's artifacts.
        window: Rolling window for the volatility figures.

    Returns:
        Long frame with columns date, series, value.
    """
    builder = FIGURE_BUILDERS.get(figure)
    if builder is None:
        raise UnknownFigure(f"figure {figure} does not exist; choose one of 1..{len(FIGURES)}")
    frame = builder(Path(out_dir), window)
    logger.info("Figure %d: %d rows", figure, len(frame))
    return frame


def figure_csv(figure: int, out_dir: Union[str, Path], window: int = 30) -> str:
    frame = figure_data(figure, out_dir, window)
    return frame.to_csv(index=False, float_format="%.12g", lineterminator="\n")


__all__ = ["FIGURES", "figure_csv", "figure_data"]
