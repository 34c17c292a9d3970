import numpy as np
import pandas as pd
import pytest

from regime_allocation.data_adapter import CsvPriceClient, PriceClient, get_price_client
from regime_allocation.errors import MissingFile
from regime_allocation.market_data import SYMBOLS, build_panel, load_price_csv
from regime_allocation.synthetic import (
    DVIX_MEANS,
    VIX_FLOOR,
    generate_market,
    regime_transition,
    write_fixture,
)


def test_fixture_files_have_price_csv_layout(fixture_dir):
    for symbol in SYMBOLS:
        path = fixture_dir / f"{symbol.lower()}.csv"
        lines = path.read_text().splitlines()
        assert lines[0] == "date,close"
        assert len(lines) == 201
        assert lines[1].startswith("2010-01-04,")


def test_client_reads_every_symbol(fixture_dir):
    client = get_price_client({"data_dir": str(fixture_dir)})
    assert isinstance(client, PriceClient)
    prices = client.fetch_all()
    assert set(prices) == set(SYMBOLS)
    assert all(len(series) == 200 for series in prices.values())


def test_explicit_path_wins_over_data_dir(fixture_dir, tmp_path):
    other = tmp_path / "other_spy.csv"
    other.write_text("date,close\n2010-01-04,1.0\n2010-01-05,2.0\n")
    client = get_price_client({"data_dir": str(fixture_dir), "spy_path": str(other)})
    assert client.paths["SPY"] == other
    assert client.fetch("spy").closes.tolist() == [1.0, 2.0]
    assert client.paths["TLT"] == fixture_dir / "tlt.csv"


def test_fetch_trims_inclusive_range(fixture_dir):
    client = CsvPriceClient({"GLD": fixture_dir / "gld.csv"})
    full = client.fetch("GLD")
    start, end = full.dates[10], full.dates[19]
    trimmed = client.fetch("GLD", start=start.date(), end=end.date().isoformat())
    assert len(trimmed) == 10
    assert trimmed.dates[0] == start
    assert trimmed.dates[-1] == end


def test_unconfigured_symbol(tmp_path):
    client = get_price_client({"data_dir": None})
    with pytest.raises(MissingFile):
        client.fetch("VIX")


def test_missing_file_names_the_path(tmp_path):
    client = get_price_client({"data_dir": str(tmp_path)})
    with pytest.raises(MissingFile, match="tlt.csv"):
        client.fetch("TLT")


def test_generated_market_is_seeded():
    a, b = generate_market(120, seed=3), generate_market(120, seed=3)
    for symbol in SYMBOLS:
        pd.testing.assert_series_equal(a.prices[symbol].closes, b.prices[symbol].closes)
    assert a.regimes == b.regimes
    assert len(a.regimes) == 119
    c = generate_market(120, seed=4)
    assert not np.array_equal(a.prices["SPY"].closes.to_numpy(), c.prices["SPY"].closes.to_numpy())


def test_generated_market_shapes():
    market = generate_market(300, seed=1)
    vix = market.prices["VIX"].closes
    assert vix.min() == pytest.approx(VIX_FLOOR)
    assert market.regimes.states[0] == 0
    assert market.regimes.n_states == len(DVIX_MEANS)
    panel = build_panel(*(market.prices[s] for s in SYMBOLS))
    assert len(panel) == 299
    # ΔVIX on the panel is exactly the generated VIX change
    np.testing.assert_allclose(panel.delta_vix.to_numpy(), np.diff(vix.to_numpy()))


def test_generated_regimes_follow_transition_matrix():
    market = generate_market(20_000, seed=2)
    states = market.regimes.states
    counts = np.zeros((3, 3))
    np.add.at(counts, (states[:-1], states[1:]), 1)
    estimate = counts / counts.sum(axis=1, keepdims=True)
    assert np.max(np.abs(estimate - regime_transition().entries)) < 0.03


def test_write_fixture_round_trips_through_loader(tmp_path):
    paths = write_fixture(tmp_path, n_days=50, seed=6)
    market = generate_market(50, seed=6)
    for symbol, path in paths.items():
        loaded = load_price_csv(path)
        np.testing.assert_allclose(
            loaded.closes.to_numpy(), market.prices[symbol].closes.to_numpy(), rtol=1e-11
        )


def test_generate_market_needs_two_days():
    with pytest.raises(ValueError):
        generate_market(1)
