import logging
from typing import Any, Dict, List

from langchain_core.runnables.config import RunnableConfig

from ..backtest import Strategy, StrategySpec, cost_sensitivity, run_all, run_full_sample
from ..report import PerformanceReport
from ..types import PipelineState, get_configuration_with_defaults
from ..utils import get_backtest_config

logger = logging.getLogger(__name__)

ROTATIONS = (Strategy.ROTATION_TOP1, Strategy.ROTATION_6040)


def _full_sample_specs(state: PipelineState, names: List[str]) -> List[StrategySpec]:
    """Configured strategies that can trade the full-sample model, in configured order."""
    specs = []
    for name in names:
        variant = Strategy(name)
        if variant is Strategy.RL_POLICY:
            continue
        if variant in ROTATIONS and state.get("rotation_rules") is None:
            logger.warning("No full-sample rotation rules; %s is left out of the full-sample report", name)
            continue
        specs.append(StrategySpec(variant, rules=state.get("rotation_rules")))
    return specs


def run_backtests(state: PipelineState, config: RunnableConfig) -> Dict[str, Any]:
    """
    Trades every configured strategy over the test window.

    Strategies are independent and run on `em_jobs` threads; rows keep the
    configured order. The same strategies (the policy aside, whose states
    belong to the training model) are also traded over the whole panel with
    the full-sample model and rules, and the test window is re-run for every
    rate of `cost_grid`.
    """
    configuration = get_configuration_with_defaults(config)
    backtest_config = get_backtest_config(configuration)
    names = list(configuration["strategies"])
    model = state["training_fit"].fitted
    specs = [
        StrategySpec(
            Strategy(name),
            rules=state["training_rules"],
            solution=state["policy"],
            actions=state["actions"],
        )
        for name in names
    ]
    results = run_all(
        state["panel"], specs, model, backtest_config, max_workers=configuration["em_jobs"]
    )
    report = PerformanceReport(
        train_fraction=backtest_config.train_fraction,
        execution_lag_days=backtest_config.execution_lag_days,
        cost_rate=backtest_config.cost_rate,
    )
    curves = {}
    for spec, (curve, row) in zip(specs, results):
        curves[spec.name] = curve
        report.add_row(row)

    full_report = PerformanceReport(
        execution_lag_days=backtest_config.execution_lag_days,
        cost_rate=backtest_config.cost_rate,
    )
    full_specs = _full_sample_specs(state, names)
    full_results = run_all(
        state["panel"],
        full_specs,
        state["selected"].fitted,
        backtest_config,
        max_workers=configuration["em_jobs"],
        runner=run_full_sample,
    )
    for _, row in full_results:
        full_report.add_row(row)

    update: Dict[str, Any] = {
        "curves": curves,
        "performance": report,
        "full_sample_performance": full_report,
    }
    if configuration["cost_grid"]:
        update["cost_table"] = cost_sensitivity(
            state["panel"], specs, model, configuration["cost_grid"], backtest_config
        )
    return update
