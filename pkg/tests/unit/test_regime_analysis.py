import numpy as np
import pandas as pd
import pytest

from regime_allocation.errors import AbsentState, LengthMismatch
from regime_allocation.markov_chain import DiscreteStateSequence
from regime_allocation.regime_analysis import (
    RegimeStats,
    RotationRules,
    conditional_stats,
    derive_rotation_rules,
    regime_durations,
)
from regime_allocation.synthetic import ASSET_MEANS, ASSET_STDS, OCCUPANCY


def _path(states, n_states):
    return DiscreteStateSequence(np.asarray(states), n_states)


def test_single_state_uses_whole_sample(synthetic_panel):
    path = _path(np.zeros(len(synthetic_panel), dtype=int), 1)
    stats = conditional_stats(synthetic_panel, path)
    assert stats.occupancy.tolist() == [1.0]
    np.testing.assert_allclose(
        stats.cond_mean.loc[0].to_numpy(), synthetic_panel.log_returns.mean().to_numpy()
    )


def test_separated_states(panel_factory):
    c = 0.01
    states = np.arange(20) % 2
    returns = np.where(states[:, None] == 0, c, -c) * np.ones((20, 3))
    stats = conditional_stats(panel_factory(returns, np.zeros(20)), _path(states, 2))
    np.testing.assert_allclose(stats.cond_mean.to_numpy(), [[c] * 3, [-c] * 3])
    np.testing.assert_allclose(stats.cond_std.to_numpy(), np.zeros((2, 3)), atol=1e-18)
    assert stats.occupancy.tolist() == [0.5, 0.5]


def test_conditional_stats_match_two_pass_recomputation(panel_factory):
    rng = np.random.default_rng(40)
    returns = rng.normal(0.0, 0.01, (40, 3))
    states = rng.integers(0, 3, 40)
    states[:3] = [0, 1, 2]
    stats = conditional_stats(panel_factory(returns, np.zeros(40)), _path(states, 3))
    for s in range(3):
        rows = returns[states == s]
        mean = rows.sum(axis=0) / len(rows)
        std = np.sqrt(((rows - mean) ** 2).sum(axis=0) / (len(rows) - 1))
        np.testing.assert_allclose(stats.cond_mean.loc[s].to_numpy(), mean, rtol=1e-12)
        np.testing.assert_allclose(stats.cond_std.loc[s].to_numpy(), std, rtol=1e-10)
        assert stats.occupancy[s] == pytest.approx(len(rows) / 40)
    assert stats.occupancy.sum() == pytest.approx(1.0, abs=1e-9)


def test_length_mismatch(panel_factory):
    panel = panel_factory(np.zeros((5, 3)), np.zeros(5))
    with pytest.raises(LengthMismatch):
        conditional_stats(panel, _path([0, 1], 2))


def test_absent_state_is_flagged_not_zeroed(panel_factory):
    panel = panel_factory(np.full((6, 3), 0.002), np.zeros(6))
    stats = conditional_stats(panel, _path([0, 0, 1, 1, 0, 1], 3))
    assert stats.absent_states == [2]
    assert stats.cond_mean.loc[2].isna().all()
    with pytest.raises(AbsentState):
        derive_rotation_rules(stats)


def test_rotation_rules_from_published_means():
    stats = RegimeStats.from_table(ASSET_MEANS, ASSET_STDS, OCCUPANCY)
    rules = derive_rotation_rules(stats)
    assert rules.top1 == ("SPY", "GLD", "TLT")
    assert rules.top2 == ("GLD", "TLT", "GLD")


def test_published_occupancy_sums_to_one_within_rounding():
    assert sum(OCCUPANCY) == pytest.approx(1.0, abs=1e-3)


def test_rotation_tie_rule():
    stats = RegimeStats.from_table([[0.001, 0.001, 0.001]], [[0.01, 0.01, 0.01]], [1.0])
    rules = derive_rotation_rules(stats)
    assert (rules.top1, rules.top2) == (("TLT",), ("GLD",))


def test_dominant_asset_everywhere():
    means = [[0.001, 0.0, 0.002], [-0.001, -0.002, 0.0], [0.0, 0.0005, 0.003]]
    stats = RegimeStats.from_table(means, np.full((3, 3), 0.01), [0.3, 0.3, 0.4])
    assert derive_rotation_rules(stats).top1 == ("SPY", "SPY", "SPY")


def test_rotation_rules_ignore_common_shift():
    base = np.array(ASSET_MEANS)
    shifted = base + np.array([[0.01], [-0.003], [0.2]])
    a = derive_rotation_rules(RegimeStats.from_table(base, ASSET_STDS, OCCUPANCY))
    b = derive_rotation_rules(RegimeStats.from_table(shifted, ASSET_STDS, OCCUPANCY))
    assert a == b


def test_stats_frame_round_trip():
    stats = RegimeStats.from_table(ASSET_MEANS, ASSET_STDS, OCCUPANCY)
    frame = stats.to_frame()
    assert list(frame.columns) == ["state", "occupancy", "asset", "mean", "std"]
    assert len(frame) == 9
    again = RegimeStats.from_frame(frame)
    pd.testing.assert_frame_equal(again.cond_mean, stats.cond_mean, check_names=False)
    np.testing.assert_allclose(again.occupancy, stats.occupancy)


def test_rules_frame():
    rules = RotationRules(("SPY", "GLD"), ("GLD", "TLT"))
    frame = rules.to_frame()
    assert frame.to_dict("list") == {"state": [0, 1], "top1": ["SPY", "GLD"], "top2": ["GLD", "TLT"]}
    assert RotationRules.from_frame(frame) == rules
    with pytest.raises(LengthMismatch):
        RotationRules(("SPY",), ("SPY",))


def test_regime_durations():
    table = regime_durations(_path([0, 0, 1, 1, 1, 0, 2], 3))
    assert table["spells"].tolist() == [2, 1, 1]
    assert table["mean_duration"].tolist() == [1.5, 3.0, 1.0]
    assert table["max_duration"].tolist() == [2, 3, 1]
