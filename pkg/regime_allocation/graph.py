from typing import Any, Callable, Dict, Optional

from langchain_core.runnables import Runnable
from langgraph.graph import END, START, StateGraph

from regime_allocation.config import parse_value
from regime_allocation.nodes import (
    analyze_regimes,
    fit_markov_chain,
    fit_training_hmm,
    ingest_data,
    run_backtests,
    select_hmm,
    solve_mdp,
    write_artifacts,
)
from regime_allocation.types import STAGES, PipelineState, RunConfig


def continue_or_write(stage: str, next_stage: str) -> Callable[[PipelineState], str]:
    """
    Builds the router that follows `stage`.

    Args:
        stage: The node the router is attached to.
        next_stage: The node to run when the pipeline goes on.

    Returns:
        A routing function returning "write_artifacts" when the run was asked
        to stop after `stage`, otherwise `next_stage`.
    """

    def route(state: PipelineState) -> str:
        if state.get("stop_after") == stage:
            return "write_artifacts"
        return next_stage

    route.__name__ = f"after_{stage}"
    return route


workflow = StateGraph(PipelineState, RunConfig)

workflow.add_node("ingest_data", ingest_data)
workflow.add_node("fit_markov_chain", fit_markov_chain)
workflow.add_node("select_hmm", select_hmm)
workflow.add_node("analyze_regimes", analyze_regimes)
workflow.add_node("fit_training_hmm", fit_training_hmm)
workflow.add_node("solve_mdp", solve_mdp)
workflow.add_node("run_backtests", run_backtests)
workflow.add_node("write_artifacts", write_artifacts)

workflow.add_edge(START, "ingest_data")
for current, following in zip(STAGES[:-1], STAGES[1:]):
    workflow.add_conditional_edges(
        current, continue_or_write(current, following), [following, "write_artifacts"]
    )
workflow.add_edge("run_backtests", "write_artifacts")
workflow.add_edge("write_artifacts", END)

graph = workflow.compile()
graph.name = "Regime Allocation Pipeline"


def create_pipeline(*, recursion_limit: int = 25, **configuration: Any) -> Runnable:
    """Configuration for the allocation pipeline.

    Every keyword is a RunConfig key (see `regime_allocation.types.RunConfig`);
    values are coerced and validated eagerly, and unset keys fall back to the
    defaults when the nodes run.

    Attributes:
        recursion_limit: The maximum number of graph steps. Default is 25.
        configuration: RunConfig overrides, e.g. `n_states=(2, 3)`, `seed=42`,
            `out_dir="out"`, `stop_after="select_hmm"`.
    """
    configurable: Dict[str, Any] = {}
    for key, value in configuration.items():
        configurable[key] = None if value is None else parse_value(key, value)

    configured_graph = graph.with_config(
        config={
            "configurable": configurable,
            "recursion_limit": recursion_limit,
        }
    )

    return configured_graph


def run_pipeline(
    configuration: RunConfig, initial_state: Optional[Dict[str, Any]] = None
) -> Dict[str, Any]:
    """Runs the pipeline to completion (or to `stop_after`) and returns the final state."""
    pipeline = create_pipeline(**configuration)
    inputs: Dict[str, Any] = {"stop_after": configuration.get("stop_after")}
    inputs.update(initial_state or {})
    return pipeline.invoke(inputs)


__all__ = ["create_pipeline", "graph", "run_pipeline"]
