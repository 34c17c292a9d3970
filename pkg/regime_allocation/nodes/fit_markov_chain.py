import logging
from typing import Any, Dict

from langchain_core.runnables.config import RunnableConfig

from ..markov_chain import estimate_transition_mle, quantile_bin, stationary_distribution
from ..types import PipelineState, get_configuration_with_defaults

logger = logging.getLogger(__name__)


def fit_markov_chain(state: PipelineState, config: RunnableConfig) -> Dict[str, Any]:
    """Bins the observable at its quantiles and estimates the observable regime chain."""
    configuration = get_configuration_with_defaults(config)
    sequence, edges = quantile_bin(state["observations"], configuration["mc_bins"])
    transition = estimate_transition_mle(sequence)
    stationary = stationary_distribution(transition)
    logger.info("Markov chain stationary distribution: %s", stationary.round(4).tolist())
    return {
        "mc_edges": edges,
        "mc_sequence": sequence,
        "mc_transition": transition,
        "mc_stationary": stationary,
    }
