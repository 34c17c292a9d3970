"""
Run configuration: a flat KEY=VALUE file merged with command-line overrides.

Files are read with `dotenv_values`, so the process environment is never
touched. Keys are case-insensitive. Values from the file arrive as strings and
are coerced here; overrides from flags arrive already typed and go through the
same validation.
"""

import logging
import math
from pathlib import Path
from typing import Any, Callable, Dict, Mapping, Optional, Tuple, Union

from dotenv import dotenv_values

from .backtest import Strategy
from .errors import InvalidConfigValue, MissingPrerequisite, UnknownConfigKey
from .types import DEFAULTS, STAGES, RunConfig

logger = logging.getLogger(__name__)


def _int_list(value: Any) -> Tuple[int, ...]:
    if isinstance(value, str):
        parts = [p.strip() for p in value.split(",") if p.strip()]
        return tuple(int(p) for p in parts)
    if isinstance(value, int):
        return (value,)
    return tuple(int(v) for v in value)


def _str_list(value: Any) -> Tuple[str, ...]:
    if isinstance(value, str):
        return tuple(p.strip() for p in value.split(",") if p.strip())
    return tuple(str(v) for v in value)


def _float_list(value: Any) -> Tuple[float, ...]:
    if isinstance(value, str):
        return tuple(float(p) for p in (p.strip() for p in value.split(",")) if p)
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(v) for v in value)


def _flag(value: Any) -> bool:
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ("1", "true", "yes", "on"):
        return True
    if text in ("0", "false", "no", "off", ""):
        return False
    raise ValueError(f"not a boolean: {value!r}")


def _optional_str(value: Any) -> Optional[str]:
    text = str(value).strip()
    return text or None


PARSERS: Dict[str, Callable[[Any], Any]] = {
    "data_dir": _optional_str,
    "tlt_path": _optional_str,
    "gld_path": _optional_str,
    "spy_path": _optional_str,
    "vix_path": _optional_str,
    "observable": lambda v: str(v).strip(),
    "n_states": _int_list,
    "em_tolerance": float,
    "em_max_iterations": int,
    "em_restarts": int,
    "em_jobs": int,
    "seed": int,
    "train_fraction": float,
    "lag": int,
    "gamma": float,
    "reward": lambda v: str(v).strip(),
    "cost_rate": float,
    "cost_grid": _float_list,
    "verify_policy": _flag,
    "trading_days_per_year": int,
    "rolling_window": int,
    "mc_bins": int,
    "strategies": _str_list,
    "out_dir": lambda v: str(v).strip(),
    "stop_after": _optional_str,
}

# (predicate, description) per key, checked after parsing
DOMAINS: Dict[str, Tuple[Callable[[Any], bool], str]] = {
    "observable": (lambda v: v in ("dvix", "spy_logret"), "one of dvix, spy_logret"),
    "n_states": (lambda v: len(v) > 0 and all(n >= 1 for n in v), "a comma list of counts >= 1"),
    "em_tolerance": (lambda v: v > 0, "positive"),
    "em_max_iterations": (lambda v: v >= 1, "at least 1"),
    "em_restarts": (lambda v: v >= 1, "at least 1"),
    "em_jobs": (lambda v: v >= 1, "at least 1"),
    "seed": (lambda v: v >= 0, "nonnegative"),
    "train_fraction": (lambda v: 0.0 < v < 1.0, "in (0, 1)"),
    "lag": (lambda v: v >= 0, "nonnegative"),
    "gamma": (lambda v: 0.0 <= v < 1.0, "in [0, 1)"),
    "reward": (lambda v: v in ("current", "next"), "one of current, next"),
    "cost_rate": (lambda v: v >= 0.0, "nonnegative"),
    "cost_grid": (
        lambda v: all(math.isfinite(r) and r >= 0.0 for r in v),
        "a comma list of nonnegative rates",
    ),
    "trading_days_per_year": (lambda v: v >= 1, "at least 1"),
    "rolling_window": (lambda v: v >= 2, "at least 2"),
    "mc_bins": (lambda v: v >= 2, "at least 2"),
    "strategies": (
        lambda v: len(v) > 0 and all(s in Strategy._value2member_map_ for s in v),
        "a comma list of " + ", ".join(s.value for s in Strategy),
    ),
    "out_dir": (lambda v: bool(v), "a directory path"),
    "stop_after": (lambda v: v is None or v in STAGES, "a pipeline stage name"),
}


def parse_value(key: str, value: Any) -> Any:
    """
    Coerces and validates one configuration value.

    Raises:
        UnknownConfigKey: The key is not a RunConfig field.
        InvalidConfigValue: The value cannot be parsed or is out of its domain.
    """
    if key not in PARSERS:
        raise UnknownConfigKey(f"unknown configuration key: {key}")
    try:
        parsed = PARSERS[key](value)
    except (TypeError, ValueError) as e:
        raise InvalidConfigValue(f"{key}={value!r}: {e}") from e
    domain = DOMAINS.get(key)
    if domain is not None and parsed is not None and not domain[0](parsed):
        raise InvalidConfigValue(f"{key}={value!r}: must be {domain[1]}")
    return parsed


def load_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """
    Reads a flat KEY=VALUE file.

    Args:
        path: The configuration file.

    Returns:
        Parsed values for the keys present in the file only.
    """
    path = Path(path)
    if not path.is_file():
        raise MissingPrerequisite(f"configuration file not found: {path}")
    raw = dotenv_values(path)
    values: Dict[str, Any] = {}
    for key, value in raw.items():
        name = key.strip().lower()
        if value is None:
            raise InvalidConfigValue(f"{name} has no value")
        values[name] = parse_value(name, value)
    logger.info("Loaded %d configuration keys from %s", len(values), path)
    return values


def resolve_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Mapping[str, Any]] = None,
) -> RunConfig:
    """
    Merges defaults, the configuration file and flag overrides, in rising precedence.

    Overrides whose value is None are treated as not given.
    """
    merged: Dict[str, Any] = dict(DEFAULTS)
    if config_path is not None:
        merged.update(load_config_file(config_path))
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        merged[key] = parse_value(key, value)
    return RunConfig(**merged)  # type: ignore[typeddict-item]
