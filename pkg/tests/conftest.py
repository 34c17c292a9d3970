from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from regime_allocation.market_data import ASSETS, AlignedPanel, build_panel
from regime_allocation.synthetic import generate_market, write_fixture

FIXTURE_DAYS = 200
FIXTURE_SEED = 7


@pytest.fixture
def fixture_dir(tmp_path: Path) -> Path:
    """The 200-row four-symbol CSV set, written fresh for each test."""
    data_dir = tmp_path / "data"
    write_fixture(data_dir, n_days=FIXTURE_DAYS, seed=FIXTURE_SEED)
    return data_dir


@pytest.fixture(scope="session")
def synthetic_panel() -> AlignedPanel:
    market = generate_market(500, seed=11)
    p = market.prices
    return build_panel(p["TLT"], p["GLD"], p["SPY"], p["VIX"])


def make_panel(returns: np.ndarray, dvix: np.ndarray, start: str = "2020-01-01") -> AlignedPanel:
    """Panel from raw daily log-returns (T×3) and ΔVIX (T) on business days."""
    dates = pd.bdate_range(start=start, periods=len(dvix), name="date")
    frame = pd.DataFrame(np.asarray(returns, dtype=float), index=dates, columns=list(ASSETS))
    return AlignedPanel(frame, pd.Series(np.asarray(dvix, dtype=float), index=dates, name="dvix"))


@pytest.fixture
def panel_factory():
    return make_panel
