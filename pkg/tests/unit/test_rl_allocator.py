import numpy as np
import pytest

from regime_allocation.errors import InvalidAction, RewardAbsentState, SingularSystem
from regime_allocation.markov_chain import TransitionMatrix
from regime_allocation.regime_analysis import RegimeStats
from regime_allocation.rl_allocator import (
    ActionSet,
    MdpModel,
    PolicySolution,
    WeightVector,
    build_mdp,
    build_reward_table,
    default_action_set,
    enumerate_policies,
    is_bellman_optimal,
    policy_evaluation,
    policy_iteration,
    q_value,
    verify_policy,
)
from regime_allocation.synthetic import ASSET_MEANS, ASSET_STDS, OCCUPANCY, regime_transition


@pytest.fixture
def published_stats():
    return RegimeStats.from_table(ASSET_MEANS, ASSET_STDS, OCCUPANCY)


def _random_mdp(rng, n_states, gamma):
    transition = TransitionMatrix(rng.dirichlet(np.ones(n_states), size=n_states))
    return MdpModel(transition, rng.normal(0.0, 0.001, (n_states, 7)), gamma)


def test_default_action_set():
    actions = default_action_set()
    assert len(actions) == 7
    assert actions[2] == WeightVector(0.0, 1.0, 0.0)
    assert actions[3] == WeightVector(0.0, 0.0, 1.0)
    np.testing.assert_allclose(actions.matrix().sum(axis=1), 1.0, atol=1e-9)


def test_action_set_pins_published_ids():
    actions = list(default_action_set().actions)
    actions[2], actions[3] = actions[3], actions[2]
    with pytest.raises(InvalidAction):
        ActionSet(tuple(actions))
    with pytest.raises(InvalidAction):
        ActionSet(tuple(actions[:6]))


def test_weight_vector_validation():
    with pytest.raises(InvalidAction):
        WeightVector(0.5, 0.6, -0.1)
    with pytest.raises(InvalidAction):
        WeightVector(0.5, 0.4, 0.0)
    assert WeightVector.pure("GLD") == WeightVector(0.0, 1.0, 0.0)


def test_reward_table_from_published_means(published_stats):
    reward = build_reward_table(published_stats, default_action_set())
    assert reward.shape == (3, 7)
    assert reward[0, 3] == pytest.approx(0.001295)
    assert reward[2, 2] == pytest.approx(0.000476)
    assert reward[1, 6] == pytest.approx(sum(ASSET_MEANS[1]) / 3)


def test_next_period_reward_averages_over_transitions(published_stats):
    P = regime_transition()
    current = build_reward_table(published_stats, default_action_set())
    following = build_reward_table(published_stats, default_action_set(), "next", P)
    np.testing.assert_allclose(following, P.entries @ current)
    with pytest.raises(InvalidAction):
        build_reward_table(published_stats, default_action_set(), "next")


def test_reward_refuses_absent_states():
    stats = RegimeStats.from_table(
        [[0.001, 0.0, 0.0], [np.nan, np.nan, np.nan]], np.full((2, 3), 0.01), [1.0, 0.0]
    )
    with pytest.raises(RewardAbsentState):
        build_reward_table(stats, default_action_set())


def test_q_value():
    P = TransitionMatrix(np.array([[0.8, 0.2], [0.3, 0.7]]))
    reward = np.tile(np.array([[1.0], [2.0]]), (1, 7))
    mdp = MdpModel(P, reward, 0.5)
    values = np.array([10.0, 20.0])
    # 1 + 0.5 * (0.8·10 + 0.2·20) = 7
    assert q_value(mdp, values, 0, 4) == pytest.approx(7.0)
    # 2 + 0.5 * (0.3·10 + 0.7·20) = 10.5
    assert q_value(mdp, values, 1, 0) == pytest.approx(10.5)
    assert q_value(mdp, np.zeros(2), 1, 3) == pytest.approx(2.0)
    myopic = MdpModel(P, reward, 0.0)
    assert q_value(myopic, values, 0, 1) == pytest.approx(1.0)


def test_policy_evaluation_closed_forms():
    rng = np.random.default_rng(0)
    mdp = _random_mdp(rng, 3, 0.0)
    policy = (1, 4, 6)
    np.testing.assert_allclose(policy_evaluation(mdp, policy), mdp.reward[[0, 1, 2], policy])

    single = MdpModel(TransitionMatrix(np.ones((1, 1))), np.full((1, 7), 0.002), 0.9)
    assert policy_evaluation(single, (0,))[0] == pytest.approx(0.002 / 0.1)


def test_policy_evaluation_matches_fixed_point_sweeps():
    mdp = _random_mdp(np.random.default_rng(1), 3, 0.9)
    policy = np.array([0, 3, 5])
    r_pi = mdp.reward[np.arange(3), policy]
    values = np.zeros(3)
    for _ in range(10_000):
        values = r_pi + mdp.gamma * mdp.transition.entries @ values
    np.testing.assert_allclose(policy_evaluation(mdp, policy), values, atol=1e-8)


def test_published_policy(published_stats):
    mdp = build_mdp(published_stats, regime_transition(), gamma=0.99)
    solution = policy_iteration(mdp)
    assert solution.policy == (3, 2, 0)
    assert enumerate_policies(mdp)[0] == solution.policy
    assert solution.policy == tuple(int(a) for a in np.argmax(mdp.reward, axis=1))
    assert is_bellman_optimal(mdp, solution)
    assert solution.n_iterations <= 5


def test_policy_frame(published_stats):
    mdp = build_mdp(published_stats, regime_transition(), gamma=0.99)
    frame = policy_iteration(mdp).to_frame(default_action_set())
    assert list(frame.columns) == ["state", "action_id", "w_tlt", "w_gld", "w_spy"]
    assert frame["action_id"].tolist() == [3, 2, 0]
    assert frame.iloc[0][["w_tlt", "w_gld", "w_spy"]].tolist() == [0.0, 0.0, 1.0]


@pytest.mark.parametrize("instance", range(25))
def test_policy_iteration_is_greedy_on_rewards(instance):
    rng = np.random.default_rng(200 + instance)
    n_states = int(rng.integers(1, 5))
    gamma = float(rng.choice([0.0, 0.5, 0.9, 0.99]))
    mdp = _random_mdp(rng, n_states, gamma)
    solution = policy_iteration(mdp)
    assert solution.policy == tuple(int(a) for a in np.argmax(mdp.reward, axis=1))
    assert is_bellman_optimal(mdp, solution)

    shifted = MdpModel(mdp.transition, mdp.reward + 0.01, gamma)
    moved = policy_iteration(shifted)
    assert moved.policy == solution.policy
    np.testing.assert_allclose(moved.values, solution.values + 0.01 / (1 - gamma), atol=1e-9)


def test_mdp_validation():
    P = TransitionMatrix(np.eye(2))
    with pytest.raises(InvalidAction):
        MdpModel(P, np.zeros((2, 7)), 1.0)
    with pytest.raises(InvalidAction):
        MdpModel(P, np.zeros((3, 7)), 0.5)


def test_policy_evaluation_reports_singular_system(monkeypatch):
    mdp = _random_mdp(np.random.default_rng(1), 3, 0.9)

    def singular(a, b):
        raise np.linalg.LinAlgError("Singular matrix")

    monkeypatch.setattr(np.linalg, "solve", singular)
    with pytest.raises(SingularSystem, match="singular"):
        policy_evaluation(mdp, (0, 1, 2))


def test_policy_evaluation_checks_the_residual(monkeypatch):
    mdp = _random_mdp(np.random.default_rng(2), 3, 0.9)
    monkeypatch.setattr(np.linalg, "solve", lambda a, b: np.zeros_like(b))
    with pytest.raises(SingularSystem, match="residual"):
        policy_evaluation(mdp, (0, 0, 0))


@pytest.mark.parametrize("instance", range(5))
def test_verify_policy_agrees_with_enumeration(instance):
    rng = np.random.default_rng(400 + instance)
    mdp = _random_mdp(rng, int(rng.integers(1, 4)), 0.95)
    check = verify_policy(mdp, policy_iteration(mdp))
    assert check["agrees"] and check["bellman_optimal"]
    assert check["enumerated_policy"] == list(enumerate_policies(mdp)[0])
    assert check["n_policies"] == 7**mdp.n_states


def test_verify_policy_flags_a_suboptimal_solution():
    mdp = _random_mdp(np.random.default_rng(7), 2, 0.9)
    best = policy_iteration(mdp)
    worst = tuple(int(a) for a in np.argmin(mdp.reward, axis=1))
    forged = PolicySolution(worst, policy_evaluation(mdp, worst), 1)
    check = verify_policy(mdp, forged)
    assert not check["agrees"]
    assert not check["bellman_optimal"]
    assert check["enumerated_policy"] == list(best.policy)
    assert check["max_value_gap"] > 0
