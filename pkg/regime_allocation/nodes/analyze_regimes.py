import logging
from typing import Any, Dict

from langchain_core.runnables.config import RunnableConfig

from ..hmm import backward_smooth, forward_filter, viterbi
from ..regime_analysis import conditional_stats, derive_rotation_rules, regime_durations
from ..types import PipelineState

logger = logging.getLogger(__name__)


def analyze_regimes(state: PipelineState, config: RunnableConfig) -> Dict[str, Any]:
    """
    Decodes the full sample with the selected model and summarizes each regime.

    When the decoded path never visits some state there is nothing to rank
    assets on, so the full-sample rotation rules are left out and the absent
    states are reported. The strategies trade the training-prefix rules.
    """
    model = state["selected"].fitted
    observations = state["observations"]
    filtered = forward_filter(model, observations)
    path = viterbi(model, observations)
    stats = conditional_stats(state["panel"], path)
    rules = None
    if stats.absent_states:
        logger.warning(
            "Full-sample path never visits states %s; no rotation rules for this sample",
            stats.absent_states,
        )
    else:
        rules = derive_rotation_rules(stats)
    return {
        "full_filter": filtered,
        "smoothed": backward_smooth(model, filtered).smoothed,
        "viterbi_path": path,
        "regime_stats": stats,
        "rotation_rules": rules,
        "durations": regime_durations(path),
    }
