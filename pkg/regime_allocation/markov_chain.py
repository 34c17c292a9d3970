"""Observable first-order Markov chain over quantile-binned volatility regimes."""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple, Union

import numpy as np

from .errors import (
    InvalidState,
    InvalidTransitionMatrix,
    NoConvergence,
    SequenceTooShort,
    TooFewValues,
)

logger = logging.getLogger(__name__)

ROW_SUM_TOLERANCE = 1e-9
STATIONARY_TOLERANCE = 1e-12
STATIONARY_MAX_ITERATIONS = 100_000

ArrayLike = Union[Sequence[float], np.ndarray]


def _frozen(values: np.ndarray) -> np.ndarray:
    values = np.array(values, copy=True)
    values.setflags(write=False)
    return values


@dataclass(frozen=True)
class DiscreteStateSequence:
    """Integer regime labels in {0, …, n_states − 1}."""

    states: np.ndarray
    n_states: int

    def __post_init__(self) -> None:
        states = np.asarray(self.states)
        if states.size and not np.issubdtype(states.dtype, np.integer):
            if not np.all(np.equal(np.mod(states, 1), 0)):
                raise InvalidState("state labels must be integers")
        states = states.astype(np.int64)
        if self.n_states < 1:
            raise InvalidState(f"n_states must be positive, got {self.n_states}")
        if states.size and (states.min() < 0 or states.max() >= self.n_states):
            raise InvalidState(
                f"state labels must lie in [0, {self.n_states - 1}], got "
                f"[{states.min()}, {states.max()}]"
            )
        object.__setattr__(self, "states", _frozen(states))

    def __len__(self) -> int:
        return int(self.states.size)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, DiscreteStateSequence):
            return NotImplemented
        return self.n_states == other.n_states and np.array_equal(self.states, other.states)

    def tolist(self) -> list:
        return self.states.tolist()


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Row-stochastic matrix with p_ij = P(S_{t+1} = j | S_t = i)."""

    entries: np.ndarray

    def __post_init__(self) -> None:
        entries = np.asarray(self.entries, dtype=float)
        if entries.ndim != 2 or entries.shape[0] != entries.shape[1] or entries.shape[0] < 1:
            raise InvalidTransitionMatrix(f"transition matrix must be square, got {entries.shape}")
        if not np.all(np.isfinite(entries)) or np.any(entries < 0):
            raise InvalidTransitionMatrix("transition entries must be finite and nonnegative")
        sums = entries.sum(axis=1)
        if np.any(np.abs(sums - 1.0) > ROW_SUM_TOLERANCE):
            raise InvalidTransitionMatrix(f"transition rows must sum to 1, got {sums.tolist()}")
        object.__setattr__(self, "entries", _frozen(entries))

    @property
    def n_states(self) -> int:
        return int(self.entries.shape[0])

    @classmethod
    def from_rounded(cls, entries: ArrayLike, tolerance: float = 5e-4) -> "TransitionMatrix":
        """Renormalizes a matrix published with rounded entries."""
        entries = np.asarray(entries, dtype=float)
        sums = entries.sum(axis=1, keepdims=True)
        if np.any(np.abs(sums - 1.0) > tolerance):
            raise InvalidTransitionMatrix(
                f"row sums {sums.ravel().tolist()} are further than {tolerance} from 1"
            )
        return cls(entries / sums)

    def tolist(self) -> list:
        return self.entries.tolist()


def quantile_bin(
    values: ArrayLike, n_bins: int
) -> Tuple[DiscreteStateSequence, np.ndarray]:
    """
    Bins values at their empirical k/N quantiles (linear interpolation).

    Args:
        values: The raw observations, e.g. ΔVIX.
        n_bins: Number of regimes N.

    Returns:
        The state sequence (bins in increasing value order) and the N − 1 edges.
    """
    values = np.asarray(values, dtype=float)
    if n_bins < 2:
        raise TooFewValues(f"n_bins must be at least 2, got {n_bins}")
    if values.size < n_bins:
        raise TooFewValues(f"need at least {n_bins} values to form {n_bins} bins, got {values.size}")
    levels = np.arange(1, n_bins) / n_bins
    edges = np.quantile(values, levels, method="linear")
    return classify_with_edges(values, edges), edges


def classify_with_edges(values: ArrayLike, edges: ArrayLike) -> DiscreteStateSequence:
    """Maps each value to the smallest bin b with value ≤ edges[b], else the top bin."""
    edges = np.asarray(edges, dtype=float)
    if np.any(np.diff(edges) < 0):
        raise InvalidState("bin edges must be nondecreasing")
    states = np.searchsorted(edges, np.asarray(values, dtype=float), side="left")
    return DiscreteStateSequence(states, n_states=edges.size + 1)


def transition_counts(seq: DiscreteStateSequence) -> np.ndarray:
    counts = np.zeros((seq.n_states, seq.n_states), dtype=np.int64)
    np.add.at(counts, (seq.states[:-1], seq.states[1:]), 1)
    return counts


def estimate_transition_mle(seq: DiscreteStateSequence) -> TransitionMatrix:
    """p̂_ij = n_ij / Σ_k n_ik; rows of states never departed from are uniform."""
    if len(seq) < 2:
        raise SequenceTooShort(f"need at least 2 states to count transitions, got {len(seq)}")
    counts = transition_counts(seq).astype(float)
    departures = counts.sum(axis=1, keepdims=True)
    unvisited = departures.ravel() == 0
    if unvisited.any():
        logger.warning(
            "States %s have no observed departures; using uniform rows",
            np.flatnonzero(unvisited).tolist(),
        )
    with np.errstate(invalid="ignore", divide="ignore"):
        entries = np.where(departures > 0, counts / departures, 1.0 / seq.n_states)
    return TransitionMatrix(entries)


def stationary_distribution(
    P: TransitionMatrix,
    tolerance: float = STATIONARY_TOLERANCE,
    max_iterations: int = STATIONARY_MAX_ITERATIONS,
) -> np.ndarray:
    """Power iteration from the uniform distribution until π·P = π."""
    n = P.n_states
    pi = np.full(n, 1.0 / n)
    for iteration in range(max_iterations):
        nxt = pi @ P.entries
        nxt /= nxt.sum()
        if np.max(np.abs(nxt - pi)) < tolerance:
            logger.debug("Stationary distribution converged after %d iterations", iteration + 1)
            return nxt
        pi = nxt
    raise NoConvergence(f"power iteration did not converge in {max_iterations} iterations")


def expected_durations(P: TransitionMatrix) -> np.ndarray:
    """Mean sojourn time 1 / (1 − p_ii) per state; infinite for absorbing states."""
    stay = np.diag(P.entries)
    with np.errstate(divide="ignore"):
        return np.where(stay < 1.0, 1.0 / (1.0 - stay), np.inf)


def simulate_chain(
    P: TransitionMatrix,
    n_steps: int,
    seed: Optional[int] = None,
    initial_state: int = 0,
    rng: Optional[np.random.Generator] = None,
) -> DiscreteStateSequence:
    """Draws a path of `n_steps` states starting from `initial_state`."""
    rng = rng if rng is not None else np.random.default_rng(seed)
    cumulative = np.cumsum(P.entries, axis=1)
    cumulative[:, -1] = 1.0
    draws = rng.random(n_steps)
    states = np.empty(n_steps, dtype=np.int64)
    state = initial_state
    for t in range(n_steps):
        if t > 0:
            state = int(np.searchsorted(cumulative[state], draws[t], side="right"))
        states[t] = state
    return DiscreteStateSequence(states, n_states=P.n_states)
