import logging
from typing import Any, Dict

from langchain_core.runnables.config import RunnableConfig

from ..hmm import em_fit, viterbi
from ..market_data import split_index
from ..regime_analysis import conditional_stats, derive_rotation_rules
from ..types import PipelineState, get_configuration_with_defaults
from ..utils import get_em_config

logger = logging.getLogger(__name__)


def fit_training_hmm(state: PipelineState, config: RunnableConfig) -> Dict[str, Any]:
    """
    Refits the strategy model on the chronological training prefix only.

    Starts at the selected state count. When the training Viterbi path leaves a
    state unvisited, steps down one state and refits, so that every state the
    strategies can be signalled into has training statistics.

    Args:
        state: The current state of the run.
        config: The configuration for the runnable.

    Returns:
        The training fit, its per-state statistics and rotation rules.
    """
    configuration = get_configuration_with_defaults(config)
    em_config = get_em_config(configuration)
    panel = state["panel"]
    n_train = split_index(len(panel), configuration["train_fraction"])
    train = panel.slice(0, n_train)
    observations = state["observations"][:n_train]

    n_states = state["selected"].n_states
    while True:
        report = em_fit(observations, n_states, em_config)
        stats = conditional_stats(train, viterbi(report.fitted, observations))
        if not stats.absent_states or n_states == 1:
            break
        logger.warning(
            "Training path leaves states %s of the %d-state model unvisited; refitting with %d",
            stats.absent_states,
            n_states,
            n_states - 1,
        )
        n_states -= 1

    logger.info("Strategy model: %d states fitted on %d training days", n_states, n_train)
    return {
        "training_fit": report,
        "training_stats": stats,
        "training_rules": derive_rotation_rules(stats),
    }
