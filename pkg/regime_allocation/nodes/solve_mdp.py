import logging
from typing import Any, Dict

from langchain_core.runnables.config import RunnableConfig

from ..rl_allocator import build_mdp, default_action_set, policy_iteration, verify_policy
from ..types import PipelineState, get_configuration_with_defaults

logger = logging.getLogger(__name__)


def solve_mdp(state: PipelineState, config: RunnableConfig) -> Dict[str, Any]:
    """
    Builds the regime MDP from training statistics and solves it by policy iteration.

    With `verify_policy` set the solution is also checked against every
    deterministic policy (7^N exact evaluations).
    """
    configuration = get_configuration_with_defaults(config)
    actions = default_action_set()
    mdp = build_mdp(
        state["training_stats"],
        state["training_fit"].fitted.transition,
        actions,
        gamma=configuration["gamma"],
        reward_mode=configuration["reward"],
    )
    solution = policy_iteration(mdp)
    logger.info("Policy %s after %d iterations", list(solution.policy), solution.n_iterations)
    update: Dict[str, Any] = {"actions": actions, "mdp": mdp, "policy": solution}
    if configuration["verify_policy"]:
        update["policy_check"] = verify_policy(mdp, solution)
    return update
