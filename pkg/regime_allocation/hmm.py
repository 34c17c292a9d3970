"""Univariate Gaussian hidden Markov model.

Scaled forward (Hamilton) filtering, backward smoothing, Viterbi decoding,
multi-start EM estimation and information-criterion model selection.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import norm

from .errors import (
    AllRestartsDegenerate,
    InvalidModel,
    NoCandidates,
    NonFiniteObservation,
    NumericalUnderflow,
    TooFewObservations,
)
from .markov_chain import DiscreteStateSequence, TransitionMatrix, simulate_chain

logger = logging.getLogger(__name__)

VARIANCE_FLOOR = 1e-12
PROBABILITY_TOLERANCE = 1e-9

ArrayLike = Union[Sequence[float], np.ndarray]


def _frozen(values: ArrayLike) -> np.ndarray:
    array = np.array(values, dtype=float, copy=True)
    array.setflags(write=False)
    return array


def parameter_count(n_states: int) -> int:
    """Free parameters: N means, N variances, N(N−1) transitions, N−1 initial."""
    return n_states + n_states + n_states * (n_states - 1) + (n_states - 1)


@dataclass(frozen=True, eq=False)
class GaussianHmm:
    """N-state HMM with Gaussian emissions on a univariate observable.

    Attributes:
        initial: Distribution of the first hidden state.
        transition: Row-stochastic regime transition matrix.
        means: Per-state emission mean, in observation units.
        stds: Per-state emission standard deviation, in observation units.
    """

    initial: np.ndarray
    transition: TransitionMatrix
    means: np.ndarray
    stds: np.ndarray
    variance_floor: float = VARIANCE_FLOOR

    def __post_init__(self) -> None:
        initial = _frozen(self.initial)
        means = _frozen(self.means)
        stds = _frozen(self.stds)
        n = self.transition.n_states
        if not (initial.shape == means.shape == stds.shape == (n,)):
            raise InvalidModel(
                f"parameter shapes disagree: initial {initial.shape}, means {means.shape}, "
                f"stds {stds.shape}, transition {self.transition.entries.shape}"
            )
        if np.any(initial < 0) or abs(initial.sum() - 1.0) > PROBABILITY_TOLERANCE:
            raise InvalidModel(f"initial distribution must sum to 1, got {initial.tolist()}")
        if not np.all(np.isfinite(means)):
            raise InvalidModel("means must be finite")
        if not np.all(np.isfinite(stds)) or np.any(stds < math.sqrt(self.variance_floor)):
            raise InvalidModel(f"stds must be at least {math.sqrt(self.variance_floor)}")
        object.__setattr__(self, "initial", initial)
        object.__setattr__(self, "means", means)
        object.__setattr__(self, "stds", stds)

    @property
    def n_states(self) -> int:
        return self.transition.n_states

    @property
    def n_parameters(self) -> int:
        return parameter_count(self.n_states)

    @classmethod
    def from_params(
        cls,
        initial: ArrayLike,
        transition: ArrayLike,
        means: ArrayLike,
        stds: ArrayLike,
    ) -> "GaussianHmm":
        return cls(
            np.asarray(initial, dtype=float),
            TransitionMatrix(np.asarray(transition, dtype=float)),
            np.asarray(means, dtype=float),
            np.asarray(stds, dtype=float),
        )

    def log_densities(self, observations: np.ndarray) -> np.ndarray:
        """T×N matrix of ln f(y_t | S_t = i); -inf only where the square overflows."""
        with np.errstate(over="ignore"):
            return norm.logpdf(
                observations[:, None], loc=self.means[None, :], scale=self.stds[None, :]
            )

    def relabel_by_std(self) -> "GaussianHmm":
        """Permutes state labels so that stds ascend (state 0 = calmest)."""
        order = np.argsort(self.stds, kind="stable")
        return self.permuted(order)

    def permuted(self, order: ArrayLike) -> "GaussianHmm":
        order = np.asarray(order, dtype=int)
        entries = self.transition.entries[np.ix_(order, order)]
        return GaussianHmm(
            self.initial[order],
            TransitionMatrix(entries),
            self.means[order],
            self.stds[order],
            self.variance_floor,
        )

    def sample(
        self, n_obs: int, seed: Optional[int] = None
    ) -> Tuple[np.ndarray, DiscreteStateSequence]:
        """Simulates observations and the hidden path that produced them."""
        rng = np.random.default_rng(seed)
        start = int(rng.choice(self.n_states, p=self.initial))
        path = simulate_chain(self.transition, n_obs, initial_state=start, rng=rng)
        observations = rng.normal(self.means[path.states], self.stds[path.states])
        return observations, path

    def to_dict(self) -> dict:
        return {
            "n_states": self.n_states,
            "initial": self.initial.tolist(),
            "transition": self.transition.tolist(),
            "means": self.means.tolist(),
            "stds": self.stds.tolist(),
        }

    @classmethod
    def from_dict(cls, payload: dict) -> "GaussianHmm":
        return cls.from_params(
            payload["initial"], payload["transition"], payload["means"], payload["stds"]
        )


@dataclass(frozen=True, eq=False)
class FilterResult:
    """Output of the scaled forward recursion.

    Attributes:
        predicted: ξ_{t|t−1}, T×N.
        filtered: ξ_{t|t}, T×N.
        log_normalizers: ln c_t, with c_t = Σ_j ξ_{t|t−1}(j) f(y_t | S_t = j).
        log_likelihood: Σ_t ln c_t.
    """

    predicted: np.ndarray
    filtered: np.ndarray
    log_normalizers: np.ndarray
    log_likelihood: float


@dataclass(frozen=True, eq=False)
class SmoothedResult:
    smoothed: np.ndarray


@dataclass(frozen=True)
class EmConfig:
    """EM settings.

    Attributes:
        tolerance: Stop when the relative log-likelihood improvement falls below this.
        max_iterations: Iteration cap per restart.
        n_restarts: Independent seeded starts; the best final log-likelihood wins.
        seed: Base seed; restart r uses `seed + r`.
        jitter: Scale of the seeded perturbation of the initial means, as a
            fraction of the sample standard deviation.
        n_jobs: Restarts evaluated concurrently (threads).
    """

    tolerance: float = 1e-6
    max_iterations: int = 500
    n_restarts: int = 10
    seed: int = 0
    variance_floor: float = VARIANCE_FLOOR
    jitter: float = 0.05
    n_jobs: int = 1


@dataclass(frozen=True, eq=False)
class EmReport:
    fitted: GaussianHmm
    loglik_trace: Tuple[float, ...]
    n_iterations: int
    converged: bool
    n_restarts_used: int
    best_restart_seed: int
    n_obs: int = 0
    restart_logliks: Tuple[float, ...] = field(default_factory=tuple)

    @property
    def n_states(self) -> int:
        return self.fitted.n_states

    @property
    def log_likelihood(self) -> float:
        return self.loglik_trace[-1]


def _check_observations(observations: ArrayLike) -> np.ndarray:
    y = np.asarray(observations, dtype=float).ravel()
    if not np.all(np.isfinite(y)):
        bad = int(np.flatnonzero(~np.isfinite(y))[0])
        raise NonFiniteObservation(f"observation {bad} is not finite: {y[bad]}")
    return y


def forward_filter(model: GaussianHmm, observations: ArrayLike) -> FilterResult:
    """
    Hamilton filter with per-step normalization.

    Densities stay in log space: each step is shifted by the largest log
    density among the states the prediction can reach, so an observation far
    in any state's tail still yields a finite likelihood.

    Args:
        model: The HMM whose parameters are held fixed.
        observations: y_1 … y_T.

    Returns:
        Predicted and filtered state probabilities, the log normalizers and the
        log-likelihood Σ ln c_t.
    """
    y = _check_observations(observations)
    if y.size < 1:
        raise TooFewObservations("need at least one observation")
    log_dens = model.log_densities(y)
    P = model.transition.entries
    T, N = log_dens.shape
    predicted = np.empty((T, N))
    filtered = np.empty((T, N))
    log_normalizers = np.empty(T)

    prior = model.initial
    for t in range(T):
        predicted[t] = prior
        shift = log_dens[t][prior > 0].max()
        if not np.isfinite(shift):
            raise NumericalUnderflow(f"all state densities vanish at t={t} (y={y[t]})")
        joint = prior * np.exp(log_dens[t] - shift)
        c = joint.sum()
        log_normalizers[t] = shift + math.log(c)
        filtered[t] = joint / c
        prior = filtered[t] @ P

    return FilterResult(predicted, filtered, log_normalizers, float(log_normalizers.sum()))


def backward_smooth(model: GaussianHmm, filter_result: FilterResult) -> SmoothedResult:
    """ξ_{t|T}(i) = ξ_{t|t}(i) · Σ_j p_ij ξ_{t+1|T}(j) / ξ_{t+1|t}(j), with 0/0 = 0."""
    filtered = filter_result.filtered
    predicted = filter_result.predicted
    P = model.transition.entries
    T = filtered.shape[0]
    smoothed = np.empty_like(filtered)
    smoothed[-1] = filtered[-1]
    for t in range(T - 2, -1, -1):
        ratio = _safe_ratio(smoothed[t + 1], predicted[t + 1])
        row = filtered[t] * (P @ ratio)
        smoothed[t] = row / row.sum()
    return SmoothedResult(smoothed)


def _safe_ratio(numerator: np.ndarray, denominator: np.ndarray) -> np.ndarray:
    out = np.zeros_like(numerator)
    np.divide(numerator, denominator, out=out, where=denominator > 0)
    return out


def smoothed_pairwise(
    model: GaussianHmm, filter_result: FilterResult, smoothed: SmoothedResult
) -> np.ndarray:
    """Σ_t P(S_t = i, S_{t+1} = j | y_1…y_T) as an N×N matrix of expected counts."""
    P = model.transition.entries
    filtered = filter_result.filtered[:-1]
    ratio = np.zeros_like(smoothed.smoothed[1:])
    np.divide(
        smoothed.smoothed[1:],
        filter_result.predicted[1:],
        out=ratio,
        where=filter_result.predicted[1:] > 0,
    )
    return P * (filtered.T @ ratio)


def viterbi(model: GaussianHmm, observations: ArrayLike) -> DiscreteStateSequence:
    """Most probable state path, computed in log space; ties go to the lower state."""
    y = _check_observations(observations)
    if y.size < 1:
        raise TooFewObservations("need at least one observation")
    log_dens = model.log_densities(y)
    with np.errstate(divide="ignore"):
        log_p = np.log(model.transition.entries)
        score = np.log(model.initial) + log_dens[0]
    T, N = log_dens.shape
    back = np.zeros((T, N), dtype=np.int64)
    for t in range(1, T):
        candidates = score[:, None] + log_p
        back[t] = np.argmax(candidates, axis=0)
        score = candidates[back[t], np.arange(N)] + log_dens[t]
    path = np.empty(T, dtype=np.int64)
    path[-1] = int(np.argmax(score))
    for t in range(T - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return DiscreteStateSequence(path, N)


def path_log_probability(model: GaussianHmm, observations: ArrayLike, path: ArrayLike) -> float:
    """ln π_{s_0} + Σ ln p_{s_{t−1} s_t} + Σ ln f(y_t | s_t)."""
    y = _check_observations(observations)
    s = np.asarray(path, dtype=int)
    with np.errstate(divide="ignore"):
        total = np.log(model.initial[s[0]])
        total += np.log(model.transition.entries[s[:-1], s[1:]]).sum()
        total += norm.logpdf(y, loc=model.means[s], scale=model.stds[s]).sum()
    return float(total)


def _initial_model(
    y: np.ndarray, n_states: int, rng: np.random.Generator, config: EmConfig
) -> GaussianHmm:
    sd = float(y.std(ddof=1)) if y.size > 1 else 1.0
    sd = max(sd, math.sqrt(config.variance_floor))
    levels = (np.arange(n_states) + 0.5) / n_states
    means = np.quantile(y, levels) + rng.normal(0.0, config.jitter * sd, n_states)
    if n_states > 1:
        off = 0.1 / (n_states - 1)
        transition = np.full((n_states, n_states), off)
        np.fill_diagonal(transition, 0.9)
    else:
        transition = np.ones((1, 1))
    return GaussianHmm(
        np.full(n_states, 1.0 / n_states),
        TransitionMatrix(transition),
        means,
        np.full(n_states, sd),
        config.variance_floor,
    )


def _m_step(
    model: GaussianHmm,
    y: np.ndarray,
    smoothed: np.ndarray,
    pairwise: np.ndarray,
    variance_floor: float,
) -> Tuple[GaussianHmm, np.ndarray]:
    """Returns the updated model and a mask of states whose variance hit the floor."""
    weights = smoothed.sum(axis=0)
    initial = smoothed[0] / smoothed[0].sum()

    departures = pairwise.sum(axis=1, keepdims=True)
    safe = np.where(departures > 0, departures, 1.0)
    transition = np.where(departures > 0, pairwise / safe, model.transition.entries)
    transition = transition / transition.sum(axis=1, keepdims=True)

    means = model.means.copy()
    variances = model.stds**2
    alive = weights > 0
    means[alive] = (smoothed[:, alive] * y[:, None]).sum(axis=0) / weights[alive]
    dev2 = (y[:, None] - means[None, :]) ** 2
    variances[alive] = (smoothed[:, alive] * dev2[:, alive]).sum(axis=0) / weights[alive]
    floored = variances <= variance_floor
    variances = np.maximum(variances, variance_floor)

    updated = GaussianHmm(
        initial,
        TransitionMatrix(transition),
        means,
        np.sqrt(variances),
        variance_floor,
    )
    return updated, floored


def _closed_form_single_state(y: np.ndarray, config: EmConfig) -> Tuple[GaussianHmm, float, bool]:
    variance = float(np.mean((y - y.mean()) ** 2))
    floored = variance <= config.variance_floor
    model = GaussianHmm(
        np.ones(1),
        TransitionMatrix(np.ones((1, 1))),
        np.array([y.mean()]),
        np.array([math.sqrt(max(variance, config.variance_floor))]),
        config.variance_floor,
    )
    return model, forward_filter(model, y).log_likelihood, floored


@dataclass(frozen=True, eq=False)
class _RestartOutcome:
    seed: int
    model: GaussianHmm
    trace: Tuple[float, ...]
    n_iterations: int
    converged: bool
    degenerate: bool


def _run_restart(y: np.ndarray, n_states: int, config: EmConfig, seed: int) -> _RestartOutcome:
    if n_states == 1:
        model, loglik, floored = _closed_form_single_state(y, config)
        return _RestartOutcome(seed, model, (loglik,), 1, True, floored)

    rng = np.random.default_rng(seed)
    model = _initial_model(y, n_states, rng, config)
    filt = forward_filter(model, y)
    trace: List[float] = [filt.log_likelihood]
    always_floored = np.ones(n_states, dtype=bool)
    converged = False
    iterations = 0

    for iterations in range(1, config.max_iterations + 1):
        smooth = backward_smooth(model, filt)
        pairwise = smoothed_pairwise(model, filt, smooth)
        candidate, floored = _m_step(model, y, smooth.smoothed, pairwise, config.variance_floor)
        always_floored &= floored
        candidate_filter = forward_filter(candidate, y)
        previous = trace[-1]
        model, filt = candidate, candidate_filter
        trace.append(filt.log_likelihood)
        logger.debug("seed %d iteration %d loglik %.6f", seed, iterations, trace[-1])
        if trace[-1] - previous <= config.tolerance * abs(previous):
            converged = True
            break

    return _RestartOutcome(
        seed, model, tuple(trace), iterations, converged, bool(always_floored.any())
    )


def em_fit(
    observations: ArrayLike, n_states: int, config: Optional[EmConfig] = None
) -> EmReport:
    """
    Fits a Gaussian HMM by EM with independent seeded restarts.

    Args:
        observations: The observable series (finite values only).
        n_states: Number of hidden regimes N.
        config: EM settings; defaults to `EmConfig()`.

    Returns:
        The best restart (highest final log-likelihood, ties to the lower seed),
        relabeled so that state stds ascend.
    """
    config = config or EmConfig()
    y = _check_observations(observations)
    if n_states < 1:
        raise InvalidModel(f"n_states must be positive, got {n_states}")
    if y.size < 10 * n_states:
        raise TooFewObservations(
            f"{n_states}-state fit needs at least {10 * n_states} observations, got {y.size}"
        )
    seeds = [config.seed + r for r in range(max(1, config.n_restarts))]
    if config.n_jobs > 1 and len(seeds) > 1:
        with ThreadPoolExecutor(max_workers=config.n_jobs) as pool:
            outcomes = list(pool.map(lambda s: _run_restart(y, n_states, config, s), seeds))
    else:
        outcomes = [_run_restart(y, n_states, config, s) for s in seeds]

    usable = [o for o in outcomes if not o.degenerate]
    if not usable:
        raise AllRestartsDegenerate(
            f"all {len(outcomes)} restarts of the {n_states}-state fit collapsed onto the variance floor"
        )
    if len(usable) < len(outcomes):
        logger.warning(
            "%d of %d restarts were degenerate and discarded", len(outcomes) - len(usable), len(outcomes)
        )
    best = max(usable, key=lambda o: (o.trace[-1], -o.seed))
    logger.info(
        "EM %d-state: best seed %d loglik %.4f after %d iterations (converged=%s)",
        n_states,
        best.seed,
        best.trace[-1],
        best.n_iterations,
        best.converged,
    )
    return EmReport(
        fitted=best.model.relabel_by_std(),
        loglik_trace=best.trace,
        n_iterations=best.n_iterations,
        converged=best.converged,
        n_restarts_used=len(outcomes),
        best_restart_seed=best.seed,
        n_obs=int(y.size),
        restart_logliks=tuple(o.trace[-1] for o in outcomes),
    )


def aic(log_likelihood: float, k: int) -> float:
    """AIC = 2k − 2·logL."""
    return 2.0 * k - 2.0 * log_likelihood


def bic(log_likelihood: float, k: int, n_obs: float) -> float:
    """BIC = k·ln(T) − 2·logL."""
    return k * math.log(n_obs) - 2.0 * log_likelihood


def select_model(reports: Sequence[EmReport], n_obs: int) -> Tuple[EmReport, pd.DataFrame]:
    """
    Picks the candidate with minimal BIC, ties toward fewer states.

    Returns:
        The chosen report and a table with columns n_states, loglik, k, aic, bic.
    """
    if not reports:
        raise NoCandidates("model selection needs at least one fitted candidate")
    rows = []
    for report in reports:
        k = report.fitted.n_parameters
        ll = report.log_likelihood
        rows.append(
            {
                "n_states": report.n_states,
                "loglik": ll,
                "k": k,
                "aic": aic(ll, k),
                "bic": bic(ll, k, n_obs),
            }
        )
    table = pd.DataFrame(rows, columns=["n_states", "loglik", "k", "aic", "bic"])
    chosen = min(range(len(reports)), key=lambda i: (rows[i]["bic"], rows[i]["n_states"]))
    logger.info("Selected %d-state model (BIC %.2f)", rows[chosen]["n_states"], rows[chosen]["bic"])
    return reports[chosen], table.sort_values("n_states", kind="stable").reset_index(drop=True)
