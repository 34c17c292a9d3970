import numpy as np
import pytest

from regime_allocation.errors import (
    InvalidState,
    InvalidTransitionMatrix,
    NoConvergence,
    SequenceTooShort,
    TooFewValues,
)
from regime_allocation.markov_chain import (
    DiscreteStateSequence,
    TransitionMatrix,
    classify_with_edges,
    estimate_transition_mle,
    expected_durations,
    quantile_bin,
    simulate_chain,
    stationary_distribution,
)
from regime_allocation.synthetic import regime_transition


def test_quantile_bin_exact_terciles():
    seq, edges = quantile_bin(np.arange(1, 10), 3)
    assert seq.tolist() == [0, 0, 0, 1, 1, 1, 2, 2, 2]
    assert len(edges) == 2


def test_quantile_bin_identical_values_collapse_to_lowest_bin():
    seq, _ = quantile_bin([2.5] * 6, 3)
    assert seq.tolist() == [0] * 6


def test_quantile_bin_two_bins():
    seq, edges = quantile_bin([-5.0, 0.0, 5.0, 10.0], 2)
    assert edges.tolist() == [2.5]
    assert seq.tolist() == [0, 0, 1, 1]


def test_quantile_bin_equal_occupancy():
    values = np.random.default_rng(1).normal(size=300)
    seq, _ = quantile_bin(values, 3)
    assert np.bincount(seq.states).tolist() == [100, 100, 100]


def test_quantile_bin_needs_enough_values():
    with pytest.raises(TooFewValues):
        quantile_bin([1.0, 2.0], 3)
    with pytest.raises(TooFewValues):
        quantile_bin([1.0, 2.0], 1)


def test_estimate_transition_mle_counts():
    P = estimate_transition_mle(DiscreteStateSequence(np.array([0, 0, 1, 1, 0]), 2))
    np.testing.assert_allclose(P.entries, [[0.5, 0.5], [0.5, 0.5]])


def test_estimate_transition_mle_unvisited_row_is_uniform():
    P = estimate_transition_mle(DiscreteStateSequence(np.array([0, 0, 0, 0]), 2))
    np.testing.assert_allclose(P.entries, [[1.0, 0.0], [0.5, 0.5]])


def test_estimate_transition_mle_too_short():
    with pytest.raises(SequenceTooShort) as info:
        estimate_transition_mle(DiscreteStateSequence(np.array([1]), 2))
    assert info.value.code == "TooShort"


def test_estimate_recovers_simulated_matrix():
    truth = regime_transition()
    path = simulate_chain(truth, 50_000, seed=3)
    estimate = estimate_transition_mle(path)
    assert np.max(np.abs(estimate.entries - truth.entries)) < 0.02
    np.testing.assert_allclose(estimate.entries.sum(axis=1), 1.0, atol=1e-9)
    assert np.all(estimate.entries >= 0)


def test_classify_with_edges():
    assert classify_with_edges([-1.0, 1.0], [0.0]).tolist() == [0, 1]
    # ties fall in the lower bin
    assert classify_with_edges([0.0], [0.0]).tolist() == [0]
    with pytest.raises(InvalidState):
        classify_with_edges([0.0], [1.0, 0.0])


def test_classify_with_edges_reproduces_training_states():
    values = np.random.default_rng(2).normal(size=250)
    seq, edges = quantile_bin(values, 3)
    assert classify_with_edges(values, edges) == seq


def test_stationary_distribution():
    np.testing.assert_allclose(stationary_distribution(TransitionMatrix(np.eye(3))), [1 / 3] * 3)
    half = TransitionMatrix(np.full((2, 2), 0.5))
    np.testing.assert_allclose(stationary_distribution(half), [0.5, 0.5])


def test_stationary_distribution_of_regime_matrix():
    P = regime_transition()
    pi = stationary_distribution(P)
    assert int(np.argmax(pi)) == 0
    assert pi.sum() == pytest.approx(1.0)
    np.testing.assert_allclose(pi @ P.entries, pi, atol=1e-9)
    # cross-check against the linear system (Pᵀ − I)π = 0 with Σπ = 1
    system = np.vstack([P.entries.T - np.eye(3), np.ones(3)])
    exact, *_ = np.linalg.lstsq(system, np.array([0.0, 0.0, 0.0, 1.0]), rcond=None)
    np.testing.assert_allclose(pi, exact, atol=1e-8)


def test_expected_durations():
    P = TransitionMatrix(np.array([[0.9, 0.1], [0.0, 1.0]]))
    durations = expected_durations(P)
    assert durations[0] == pytest.approx(10.0)
    assert np.isinf(durations[1])


def test_transition_matrix_validation():
    with pytest.raises(InvalidTransitionMatrix):
        TransitionMatrix(np.array([[0.5, 0.6], [0.5, 0.5]]))
    with pytest.raises(InvalidTransitionMatrix):
        TransitionMatrix(np.array([[1.2, -0.2], [0.5, 0.5]]))
    with pytest.raises(InvalidTransitionMatrix):
        TransitionMatrix(np.ones((2, 3)) / 3)
    rounded = TransitionMatrix.from_rounded([[0.9386, 0.0614], [0.0001, 1.0]])
    np.testing.assert_allclose(rounded.entries.sum(axis=1), 1.0, atol=1e-12)
    with pytest.raises(InvalidTransitionMatrix):
        TransitionMatrix.from_rounded([[0.9, 0.05], [0.5, 0.5]])


def test_state_labels_must_be_in_range():
    with pytest.raises(InvalidState):
        DiscreteStateSequence(np.array([0, 3]), 3)


def test_state_labels_must_be_integral():
    with pytest.raises(InvalidState, match="integers"):
        DiscreteStateSequence(np.array([0.0, 1.5]), 2)
    with pytest.raises(InvalidState, match="positive"):
        DiscreteStateSequence(np.array([], dtype=int), 0)
    assert InvalidState.exit_code == 2


def test_stationary_distribution_reports_non_convergence():
    P = TransitionMatrix(np.array([[0.9, 0.1], [0.5, 0.5]]))
    with pytest.raises(NoConvergence, match="2 iterations"):
        stationary_distribution(P, max_iterations=2)
    # the same chain converges with the default budget
    np.testing.assert_allclose(stationary_distribution(P), [5 / 6, 1 / 6], atol=1e-9)


def test_simulate_chain_is_seeded():
    P = regime_transition()
    first = simulate_chain(P, 500, seed=9)
    assert first == simulate_chain(P, 500, seed=9)
    assert first.states[0] == 0
