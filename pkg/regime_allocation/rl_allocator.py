"""Regime MDP over discrete portfolio weights, solved by tabular policy iteration."""

import itertools
import logging
from dataclasses import dataclass
from typing import Any, Dict, Iterable, Literal, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .errors import InvalidAction, RewardAbsentState, SingularSystem
from .market_data import ASSETS
from .markov_chain import TransitionMatrix
from .regime_analysis import RegimeStats

logger = logging.getLogger(__name__)

RewardMode = Literal["current", "next"]

N_ACTIONS = 7
BELLMAN_TOLERANCE = 1e-9
RESIDUAL_TOLERANCE = 1e-10


@dataclass(frozen=True)
class WeightVector:
    """Long-only, fully invested weights over (TLT, GLD, SPY)."""

    tlt: float
    gld: float
    spy: float

    def __post_init__(self) -> None:
        weights = self.as_array()
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise InvalidAction(f"weights must be nonnegative, got {weights.tolist()}")
        if abs(weights.sum() - 1.0) > 1e-9:
            raise InvalidAction(f"weights must sum to 1, got {weights.sum()}")

    def as_array(self) -> np.ndarray:
        return np.array([self.tlt, self.gld, self.spy], dtype=float)

    @classmethod
    def from_array(cls, weights: Sequence[float]) -> "WeightVector":
        tlt, gld, spy = (float(w) for w in weights)
        return cls(tlt, gld, spy)

    @classmethod
    def pure(cls, asset: str) -> "WeightVector":
        weights = np.zeros(len(ASSETS))
        weights[ASSETS.index(asset)] = 1.0
        return cls.from_array(weights)


@dataclass(frozen=True)
class ActionSet:
    """Exactly seven weight vectors, addressed by action id 0..6."""

    actions: Tuple[WeightVector, ...]

    def __post_init__(self) -> None:
        if len(self.actions) != N_ACTIONS:
            raise InvalidAction(f"the action set has {N_ACTIONS} actions, got {len(self.actions)}")
        if self.actions[2] != WeightVector(0.0, 1.0, 0.0):
            raise InvalidAction("action 2 must hold GLD only")
        if self.actions[3] != WeightVector(0.0, 0.0, 1.0):
            raise InvalidAction("action 3 must hold SPY only")

    def __len__(self) -> int:
        return len(self.actions)

    def __getitem__(self, action_id: int) -> WeightVector:
        return self.actions[action_id]

    def matrix(self) -> np.ndarray:
        """A×3 matrix of weights."""
        return np.vstack([w.as_array() for w in self.actions])


def default_action_set() -> ActionSet:
    """Pure holdings, equal pairs and the equal-weight triple, with ids 2 and 3 pinned."""
    third = 1.0 / 3.0
    return ActionSet(
        (
            WeightVector(1.0, 0.0, 0.0),
            WeightVector(0.5, 0.5, 0.0),
            WeightVector(0.0, 1.0, 0.0),
            WeightVector(0.0, 0.0, 1.0),
            WeightVector(0.5, 0.0, 0.5),
            WeightVector(0.0, 0.5, 0.5),
            WeightVector(third, third, 1.0 - 2 * third),
        )
    )


@dataclass(frozen=True, eq=False)
class MdpModel:
    """Finite MDP whose states are regimes and whose transitions ignore the action."""

    transition: TransitionMatrix
    reward: np.ndarray
    gamma: float

    def __post_init__(self) -> None:
        reward = np.array(self.reward, dtype=float)
        if reward.ndim != 2 or reward.shape[0] != self.transition.n_states:
            raise InvalidAction(
                f"reward table shape {reward.shape} does not match {self.transition.n_states} states"
            )
        if not np.all(np.isfinite(reward)):
            raise RewardAbsentState("reward table contains non-finite entries")
        if not 0.0 <= self.gamma < 1.0:
            raise InvalidAction(f"gamma must lie in [0, 1), got {self.gamma}")
        reward.setflags(write=False)
        object.__setattr__(self, "reward", reward)

    @property
    def n_states(self) -> int:
        return self.transition.n_states

    @property
    def n_actions(self) -> int:
        return int(self.reward.shape[1])


@dataclass(frozen=True, eq=False)
class PolicySolution:
    policy: Tuple[int, ...]
    values: np.ndarray
    n_iterations: int

    def to_frame(self, actions: ActionSet) -> pd.DataFrame:
        """Columns state, action_id, w_tlt, w_gld, w_spy."""
        rows = []
        for state, action in enumerate(self.policy):
            w = actions[action]
            rows.append(
                {"state": state, "action_id": action, "w_tlt": w.tlt, "w_gld": w.gld, "w_spy": w.spy}
            )
        return pd.DataFrame(rows, columns=["state", "action_id", "w_tlt", "w_gld", "w_spy"])


def build_reward_table(
    stats: RegimeStats,
    actions: ActionSet,
    mode: RewardMode = "current",
    transition: Optional[TransitionMatrix] = None,
) -> np.ndarray:
    """
    Expected daily return of each action in each regime.

    Args:
        stats: State-conditional means; every state must be present.
        actions: The weight set.
        mode: `current` uses R(s, a) = w_a · μ_s; `next` averages over the
            next regime, R(s, a) = Σ_{s'} P(s, s') w_a · μ_{s'}.
        transition: Required for `next`.

    Returns:
        N×A reward table.
    """
    if stats.absent_states or stats.cond_mean.isna().to_numpy().any():
        raise RewardAbsentState(f"states {stats.absent_states} have no conditional means")
    mu = stats.cond_mean[list(ASSETS)].to_numpy(dtype=float)
    current = mu @ actions.matrix().T
    if mode == "current":
        return current
    if mode == "next":
        if transition is None:
            raise InvalidAction("reward mode 'next' needs the regime transition matrix")
        return transition.entries @ current
    raise InvalidAction(f"unknown reward mode: {mode}")


def build_mdp(
    stats: RegimeStats,
    transition: TransitionMatrix,
    actions: Optional[ActionSet] = None,
    gamma: float = 0.99,
    reward_mode: RewardMode = "current",
) -> MdpModel:
    actions = actions or default_action_set()
    reward = build_reward_table(stats, actions, reward_mode, transition)
    return MdpModel(transition, reward, gamma)


def q_value(mdp: MdpModel, values: np.ndarray, s: int, a: int) -> float:
    """Q(s, a) = R(s, a) + γ Σ_{s'} P(s, s') V(s')."""
    return float(mdp.reward[s, a] + mdp.gamma * mdp.transition.entries[s] @ np.asarray(values))


def q_table(mdp: MdpModel, values: np.ndarray) -> np.ndarray:
    continuation = mdp.gamma * (mdp.transition.entries @ np.asarray(values, dtype=float))
    return mdp.reward + continuation[:, None]


def policy_evaluation(mdp: MdpModel, policy: Sequence[int]) -> np.ndarray:
    """Solves V = R_π + γ P V exactly."""
    policy = np.asarray(policy, dtype=int)
    n = mdp.n_states
    r_pi = mdp.reward[np.arange(n), policy]
    system = np.eye(n) - mdp.gamma * mdp.transition.entries
    try:
        values = np.linalg.solve(system, r_pi)
    except np.linalg.LinAlgError as e:
        raise SingularSystem(f"policy evaluation system is singular: {e}") from e
    residual = np.max(np.abs(system @ values - r_pi))
    if not residual <= RESIDUAL_TOLERANCE * max(1.0, float(np.max(np.abs(r_pi)))):
        raise SingularSystem(f"policy evaluation residual {residual:.3e} exceeds tolerance")
    return values


def policy_iteration(mdp: MdpModel) -> PolicySolution:
    """Alternates exact evaluation with greedy improvement (ties to the lower action id)."""
    policy = np.zeros(mdp.n_states, dtype=int)
    limit = mdp.n_actions**mdp.n_states + 1
    for iteration in range(1, limit + 1):
        values = policy_evaluation(mdp, policy)
        improved = np.argmax(q_table(mdp, values), axis=1)
        logger.debug("policy iteration %d: %s", iteration, improved.tolist())
        if np.array_equal(improved, policy):
            return PolicySolution(tuple(int(a) for a in policy), values, iteration)
        policy = improved
    # finite policy space with exact evaluation; reaching this means float ties cycled
    values = policy_evaluation(mdp, policy)
    return PolicySolution(tuple(int(a) for a in policy), values, limit)


def enumerate_policies(mdp: MdpModel) -> Tuple[Tuple[int, ...], np.ndarray]:
    """
    Exhaustive search over all deterministic policies with exact evaluation.

    Returns the policy whose value vector is largest, comparing lexicographically
    on (sum of values, then earliest policy in enumeration order). An optimal
    policy dominates every other one statewise, so the sum identifies it.
    """
    best: Optional[Tuple[Tuple[int, ...], np.ndarray]] = None
    for candidate in _all_policies(mdp.n_states, mdp.n_actions):
        values = policy_evaluation(mdp, candidate)
        if best is None or values.sum() > best[1].sum() + 1e-15:
            best = (candidate, values)
    assert best is not None
    return best


def _all_policies(n_states: int, n_actions: int) -> Iterable[Tuple[int, ...]]:
    return itertools.product(range(n_actions), repeat=n_states)


def is_bellman_optimal(mdp: MdpModel, solution: PolicySolution, tol: float = BELLMAN_TOLERANCE) -> bool:
    q = q_table(mdp, solution.values)
    return bool(np.all(np.abs(q.max(axis=1) - solution.values) <= tol))


def verify_policy(mdp: MdpModel, solution: PolicySolution, tol: float = BELLMAN_TOLERANCE) -> Dict[str, Any]:
    """
    Checks a policy-iteration solution against exhaustive enumeration.

    The policies may differ when actions tie; the check passes when the value
    vectors agree within `tol` and the solution satisfies Bellman optimality.
    """
    enumerated, values = enumerate_policies(mdp)
    gap = float(np.max(np.abs(values - solution.values)))
    bellman = is_bellman_optimal(mdp, solution, tol)
    agrees = bool(gap <= tol * max(1.0, float(np.max(np.abs(values)))) and bellman)
    if agrees:
        logger.info("Policy %s matches exhaustive enumeration", list(solution.policy))
    else:
        logger.warning(
            "Policy %s disagrees with enumerated %s (value gap %.3e)",
            list(solution.policy),
            list(enumerated),
            gap,
        )
    return {
        "agrees": agrees,
        "enumerated_policy": list(enumerated),
        "enumerated_values": values,
        "max_value_gap": gap,
        "bellman_optimal": bellman,
        "n_policies": mdp.n_actions**mdp.n_states,
    }
