import logging
from typing import Any, Dict

from langchain_core.runnables.config import RunnableConfig

from ..hmm import em_fit, select_model
from ..types import PipelineState, get_configuration_with_defaults
from ..utils import get_em_config

logger = logging.getLogger(__name__)


def select_hmm(state: PipelineState, config: RunnableConfig) -> Dict[str, Any]:
    """
    Fits every candidate state count on the full sample and keeps the BIC winner.

    Args:
        state: The current state of the run.
        config: The configuration for the runnable.

    Returns:
        The candidate reports, the selected one and the selection table.
    """
    configuration = get_configuration_with_defaults(config)
    em_config = get_em_config(configuration)
    observations = state["observations"]
    candidates = [em_fit(observations, n, em_config) for n in configuration["n_states"]]
    selected, table = select_model(candidates, len(observations))
    return {"candidates": candidates, "selected": selected, "selection_table": table}
