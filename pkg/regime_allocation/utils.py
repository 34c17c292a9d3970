import json
import math
from pathlib import Path
from typing import Any, Dict, Mapping, Optional, Union

import numpy as np
import pandas as pd

from .backtest import BacktestConfig
from .hmm import EmConfig, EmReport, aic, bic
from .markov_chain import TransitionMatrix, expected_durations
from .rl_allocator import MdpModel, PolicySolution

FLOAT_FORMAT = "%.12g"


def get_em_config(configuration: Mapping[str, Any]) -> EmConfig:
    """
    Builds the EM settings of a run.

    Args:
        configuration: Run configuration with defaults filled.

    Returns:
        EmConfig seeded from the run's single declared seed.
    """
    return EmConfig(
        tolerance=float(configuration["em_tolerance"]),
        max_iterations=int(configuration["em_max_iterations"]),
        n_restarts=int(configuration["em_restarts"]),
        seed=int(configuration["seed"]),
        n_jobs=int(configuration["em_jobs"]),
    )


def get_backtest_config(configuration: Mapping[str, Any]) -> BacktestConfig:
    return BacktestConfig(
        train_fraction=float(configuration["train_fraction"]),
        execution_lag_days=int(configuration["lag"]),
        cost_rate=float(configuration["cost_rate"]),
        trading_days_per_year=int(configuration["trading_days_per_year"]),
        observable=configuration["observable"],
        gamma=float(configuration["gamma"]),
        reward_mode=configuration["reward"],
    )


def json_safe(value: Any) -> Any:
    """Converts numpy values to plain Python and non-finite floats to None."""
    if isinstance(value, dict):
        return {k: json_safe(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [json_safe(v) for v in value]
    if isinstance(value, np.ndarray):
        return json_safe(value.tolist())
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def dumps_json(payload: Mapping[str, Any]) -> str:
    return json.dumps(json_safe(dict(payload)), indent=2, allow_nan=False) + "\n"


def write_text(path: Union[str, Path], text: str) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as f:
        f.write(text)
    return path


def frame_to_csv(frame: pd.DataFrame, index: bool = False) -> str:
    return frame.to_csv(index=index, float_format=FLOAT_FORMAT, lineterminator="\n")


def markov_chain_payload(
    edges: np.ndarray, transition: TransitionMatrix, stationary: np.ndarray
) -> Dict[str, Any]:
    return {
        "edges": edges,
        "transition": transition.tolist(),
        "stationary": stationary,
        "expected_durations": expected_durations(transition),
    }


def hmm_payload(report: EmReport, n_obs: int, observable: str) -> Dict[str, Any]:
    """The fitted model with its fit statistics, in the `hmm.json` layout."""
    k = report.fitted.n_parameters
    ll = report.log_likelihood
    return {
        **report.fitted.to_dict(),
        "loglik": ll,
        "aic": aic(ll, k),
        "bic": bic(ll, k, n_obs),
        "n_obs": n_obs,
        "observable": observable,
        "converged": report.converged,
        "n_iterations": report.n_iterations,
        "best_restart_seed": report.best_restart_seed,
    }


def policy_payload(
    mdp: MdpModel,
    solution: PolicySolution,
    reward_mode: str,
    verification: Optional[Mapping[str, Any]] = None,
) -> Dict[str, Any]:
    payload: Dict[str, Any] = {
        "policy": list(solution.policy),
        "values": solution.values,
        "reward_table": mdp.reward,
        "n_states": mdp.n_states,
        "gamma": mdp.gamma,
        "reward_mode": reward_mode,
        "n_iterations": solution.n_iterations,
    }
    if verification is not None:
        payload["verification"] = dict(verification)
    return payload
