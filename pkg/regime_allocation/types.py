from typing import Any, Dict, List, Literal, Optional, Tuple, TypedDict

import numpy as np
import pandas as pd
from langchain_core.runnables import RunnableConfig

from .backtest import EquityCurve
from .hmm import EmReport, FilterResult
from .market_data import AlignedPanel, Observable
from .markov_chain import DiscreteStateSequence, TransitionMatrix
from .regime_analysis import RegimeStats, RotationRules
from .report import PerformanceReport
from .rl_allocator import ActionSet, MdpModel, PolicySolution, RewardMode

Stage = Literal[
    "ingest_data",
    "fit_markov_chain",
    "select_hmm",
    "analyze_regimes",
    "fit_training_hmm",
    "solve_mdp",
    "run_backtests",
]

STAGES: Tuple[str, ...] = (
    "ingest_data",
    "fit_markov_chain",
    "select_hmm",
    "analyze_regimes",
    "fit_training_hmm",
    "solve_mdp",
    "run_backtests",
)


class PipelineState(TypedDict, total=False):
    """State schema for the allocation pipeline.

    Attributes:
        stop_after: Last computing stage of this run; the writer follows it.

        panel: The aligned return panel.
        observations: The HMM observable over the full panel.

        mc_edges: Quantile bin edges of the observable Markov chain.
        mc_sequence: The binned regime sequence.
        mc_transition: MLE transition matrix of the binned chain.
        mc_stationary: Its stationary distribution.

        candidates: One EM report per candidate state count, full sample.
        selected: The BIC-selected candidate.
        selection_table: n_states, loglik, k, aic, bic per candidate.

        full_filter: Forward filter of the selected model over the full panel.
        smoothed: T×N smoothed probabilities.
        viterbi_path: Most likely full-sample regime path.
        regime_stats: Full-sample state-conditional statistics.
        rotation_rules: Full-sample top-1 / top-2 assets per state.
        durations: Run-length summary of the Viterbi path.

        training_fit: The strategy model, refitted on the training prefix.
        training_stats: Statistics of the training prefix's Viterbi path.
        training_rules: Rotation rules the strategies trade.

        actions: The MDP action set.
        mdp: The regime MDP built from training statistics.
        policy: Its policy-iteration solution.
        policy_check: Comparison of the solution with exhaustive enumeration,
            present when `verify_policy` is set.

        curves: Equity curve per strategy name.
        performance: The backtest report.
        full_sample_performance: The non-policy strategies traded over the whole
            panel with the full-sample model and rules (in-sample reading).
        cost_table: Test-window rows per strategy and `cost_grid` rate.

        artifacts: Files written by the writer, in order.
    """

    stop_after: Optional[str]

    panel: AlignedPanel
    observations: np.ndarray

    mc_edges: np.ndarray
    mc_sequence: DiscreteStateSequence
    mc_transition: TransitionMatrix
    mc_stationary: np.ndarray

    candidates: List[EmReport]
    selected: EmReport
    selection_table: pd.DataFrame

    full_filter: FilterResult
    smoothed: np.ndarray
    viterbi_path: DiscreteStateSequence
    regime_stats: RegimeStats
    rotation_rules: Optional[RotationRules]
    durations: pd.DataFrame

    training_fit: EmReport
    training_stats: RegimeStats
    training_rules: RotationRules

    actions: ActionSet
    mdp: MdpModel
    policy: PolicySolution
    policy_check: Dict[str, Any]

    curves: Dict[str, EquityCurve]
    performance: PerformanceReport
    full_sample_performance: PerformanceReport
    cost_table: pd.DataFrame

    artifacts: List[str]


class RunConfig(TypedDict, total=False):
    """Configuration for the allocation pipeline.

    Attributes:
        data_dir: Directory holding `tlt.csv`, `gld.csv`, `spy.csv` and `vix.csv`.
        tlt_path, gld_path, spy_path, vix_path: Per-symbol CSV paths; each one
            wins over `data_dir` for its symbol.
        observable: The HMM observable, `dvix` (default) or `spy_logret`.
        n_states: Candidate regime counts compared by BIC. Default (2, 3).
        em_tolerance: Relative log-likelihood improvement that stops EM. Default 1e-6.
        em_max_iterations: EM iteration cap per restart. Default 500.
        em_restarts: Seeded EM restarts per fit. Default 10.
        em_jobs: Worker threads for restarts and strategy backtests. Default 1.
        seed: Base seed every random draw derives from. Default 0.
        train_fraction: Chronological training share. Default 0.7.
        lag: Execution lag in trading days. Default 1.
        gamma: MDP discount factor in [0, 1). Default 0.99.
        reward: MDP reward reading, `current` (default) or `next`.
        cost_rate: Proportional cost per unit of turnover. Default 0.
        cost_grid: Cost rates of the sensitivity table; empty skips it.
            Default 0, 0.001, 0.005.
        verify_policy: Check policy iteration against exhaustive enumeration
            of all deterministic policies. Default False.
        trading_days_per_year: Annualization factor. Default 252.
        rolling_window: Window of the rolling volatility views. Default 30.
        mc_bins: Bins of the observable Markov chain. Default 3.
        strategies: Strategies to backtest, in report order.
        out_dir: Directory the writer fills. Default `out`.
        stop_after: Stage after which the run writes its artifacts and ends.
    """

    data_dir: Optional[str]
    tlt_path: Optional[str]
    gld_path: Optional[str]
    spy_path: Optional[str]
    vix_path: Optional[str]
    observable: Observable
    n_states: Tuple[int, ...]
    em_tolerance: float
    em_max_iterations: int
    em_restarts: int
    em_jobs: int
    seed: int
    train_fraction: float
    lag: int
    gamma: float
    reward: RewardMode
    cost_rate: float
    cost_grid: Tuple[float, ...]
    verify_policy: bool
    trading_days_per_year: int
    rolling_window: int
    mc_bins: int
    strategies: Tuple[str, ...]
    out_dir: str
    stop_after: Optional[str]


DEFAULTS: Dict[str, Any] = {
    "data_dir": None,
    "tlt_path": None,
    "gld_path": None,
    "spy_path": None,
    "vix_path": None,
    "observable": "dvix",
    "n_states": (2, 3),
    "em_tolerance": 1e-6,
    "em_max_iterations": 500,
    "em_restarts": 10,
    "em_jobs": 1,
    "seed": 0,
    "train_fraction": 0.7,
    "lag": 1,
    "gamma": 0.99,
    "reward": "current",
    "cost_rate": 0.0,
    "cost_grid": (0.0, 0.001, 0.005),
    "verify_policy": False,
    "trading_days_per_year": 252,
    "rolling_window": 30,
    "mc_bins": 3,
    "strategies": ("top1", "6040", "ew", "spy", "rl"),
    "out_dir": "out",
    "stop_after": None,
}


def get_configuration_with_defaults(config: RunnableConfig) -> Dict[str, Any]:
    """
    Gets the configuration with defaults for the graph.

    Args:
        config: The configuration for the runnable.

    Returns:
        Dict with every RunConfig key, unset ones filled from DEFAULTS.
    """
    configurable_fields = config.get("configurable", {}) or {}
    return {
        key: configurable_fields[key] if configurable_fields.get(key) is not None else default
        for key, default in DEFAULTS.items()
    }
