import pytest

from regime_allocation.config import load_config_file, parse_value, resolve_config
from regime_allocation.errors import (
    InvalidConfigValue,
    MissingPrerequisite,
    UnknownConfigKey,
)
from regime_allocation.types import DEFAULTS, get_configuration_with_defaults


def test_defaults_when_nothing_is_given():
    configuration = resolve_config()
    assert configuration == DEFAULTS


def test_file_values_are_coerced(tmp_path):
    path = tmp_path / "run.env"
    path.write_text(
        "# regime run\n"
        "N_STATES=2,3,4\n"
        "em_restarts=3\n"
        "gamma=0.95\n"
        "strategies=top1, spy\n"
        "observable=spy_logret\n"
    )
    values = load_config_file(path)
    assert values == {
        "n_states": (2, 3, 4),
        "em_restarts": 3,
        "gamma": 0.95,
        "strategies": ("top1", "spy"),
        "observable": "spy_logret",
    }


def test_flags_beat_file_beat_defaults(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("seed=5\nlag=2\n")
    configuration = resolve_config(path, {"seed": 9, "lag": None, "gamma": 0.5})
    assert configuration["seed"] == 9
    assert configuration["lag"] == 2
    assert configuration["gamma"] == 0.5
    assert configuration["train_fraction"] == DEFAULTS["train_fraction"]


def test_unknown_key(tmp_path):
    path = tmp_path / "run.env"
    path.write_text("colour=blue\n")
    with pytest.raises(UnknownConfigKey) as info:
        load_config_file(path)
    assert info.value.exit_code == 1
    assert info.value.module == "cli_app"


@pytest.mark.parametrize(
    "key, value",
    [
        ("gamma", "1.0"),
        ("gamma", "abc"),
        ("train_fraction", "0"),
        ("reward", "later"),
        ("strategies", "top1,moon"),
        ("n_states", "0"),
        ("lag", "-1"),
        ("stop_after", "nowhere"),
        ("cost_grid", "0,-0.001"),
        ("cost_grid", "0,nan"),
        ("verify_policy", "maybe"),
    ],
)
def test_invalid_values(key, value):
    with pytest.raises(InvalidConfigValue):
        parse_value(key, value)


def test_missing_config_file(tmp_path):
    with pytest.raises(MissingPrerequisite) as info:
        resolve_config(tmp_path / "absent.env")
    assert info.value.exit_code == 2


def test_single_state_count_from_flag():
    assert parse_value("n_states", 3) == (3,)
    assert parse_value("n_states", "3") == (3,)


def test_configuration_with_defaults_fills_unset_keys():
    filled = get_configuration_with_defaults({"configurable": {"seed": 4, "gamma": None}})
    assert filled["seed"] == 4
    assert filled["gamma"] == 0.99
    assert set(filled) == set(DEFAULTS)
    assert get_configuration_with_defaults({}) == DEFAULTS


def test_cost_grid_and_verify_flag_parse():
    assert parse_value("cost_grid", "0, 0.001,0.005") == (0.0, 0.001, 0.005)
    assert parse_value("cost_grid", "") == ()
    assert parse_value("cost_grid", 0.002) == (0.002,)
    assert parse_value("verify_policy", "true") is True
    assert parse_value("verify_policy", "0") is False
    assert parse_value("verify_policy", True) is True
