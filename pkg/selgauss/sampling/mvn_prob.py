"""
Gaussian set probabilities by mean-shifted sequential importance sampling

Phi_n(A; mu, Sigma) for product selection sets. Components are drawn one at a
time from their truncated conditionals (fixed index order) under the shifted
mean mu + eta; each sample carries the product of the conditional set masses
times the density ratio phi(x; mu) / phi(x; mu + eta).
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg

from selgauss.core.gaussian import cholesky_factor, resolve_seed
from selgauss.errors import NumericUnderflowError, ParameterDomainError
from selgauss.models.selection_sets import SelectionSet
from selgauss.sampling.truncnorm import log_interval_mass, sample_union, truncated_mean

logger = logging.getLogger(__name__)

DEFAULT_N_SAMPLES = 5000
MIN_N_SAMPLES = 100
TIE_RTOL = 1e-9
# cap on (batch x samples x dimension) held at once
WORK_ELEMENTS = 8_000_000

EtaSpec = Union[None, str, Sequence[float], np.ndarray]


@dataclass(frozen=True)
class ProbEstimate:
    """Importance sampling estimate of a Gaussian set probability"""
    value: float
    std_error: float
    n_samples: int
    mean_shift: np.ndarray
    log_value: float
    relative_error: float

    @property
    def log_std_error(self) -> float:
        """Standard error of log_value (delta method)"""
        return self.relative_error

    def to_dict(self) -> Dict[str, Any]:
        return {
            "value": self.value,
            "std_error": self.std_error,
            "n_samples": self.n_samples,
            "mean_shift": np.asarray(self.mean_shift).tolist(),
            "log_value": self.log_value,
            "relative_error": self.relative_error,
        }


@dataclass(frozen=True)
class UniformStream:
    """
    Reproducible uniform draws, one independent column pair per component

    Column i depends only on (seed, i), so the same stream can be replayed
    against different (mu, Sigma, A) without storing the full matrix.
    """
    seed: int
    n_samples: int = DEFAULT_N_SAMPLES

    def column(self, i: int) -> Tuple[np.ndarray, np.ndarray]:
        draws = np.random.default_rng([self.seed, int(i)]).random((2, self.n_samples))
        return draws[0], draws[1]


def choose_mean_shift(mu: np.ndarray, sigma: np.ndarray, A: SelectionSet) -> np.ndarray:
    """
    Per-component mean shift towards the dominant interval

    The dominant interval of A_i is the one with the largest mass under the
    marginal N(mu_i, Sigma_ii). The shift moves mu_i to the truncated mean of
    that interval; it is zero when mu_i already lies inside it or when the two
    largest masses tie.
    """
    mu = np.asarray(mu, dtype=float)
    std = np.sqrt(np.clip(np.diag(np.asarray(sigma, dtype=float)), 0.0, None))
    eta = np.zeros(mu.size)
    for i, union in enumerate(A.components):
        if union.is_full or std[i] <= 0:
            continue
        masses = log_interval_mass((union.lows - mu[i]) / std[i], (union.highs - mu[i]) / std[i])
        order = np.argsort(-masses, kind="stable")
        top = order[0]
        if masses.size > 1 and np.isfinite(masses[top]):
            if abs(masses[top] - masses[order[1]]) <= TIE_RTOL * max(1.0, abs(masses[top])):
                continue
        lo, hi = union.lows[top], union.highs[top]
        if lo <= mu[i] <= hi:
            continue
        eta[i] = truncated_mean(lo, hi, mu[i], std[i]) - mu[i]
    return eta


def _resolve_eta(eta: EtaSpec, mu: np.ndarray, sigma: np.ndarray, A: SelectionSet) -> np.ndarray:
    if eta is None or (isinstance(eta, str) and eta == "auto"):
        return choose_mean_shift(mu, sigma, A)
    if isinstance(eta, str):
        if eta == "zero":
            return np.zeros(mu.size)
        raise ParameterDomainError(f"Unknown mean shift mode: {eta!r}")
    eta = np.asarray(eta, dtype=float).reshape(-1)
    if eta.size != mu.size:
        raise ParameterDomainError(f"Mean shift length {eta.size} != dimension {mu.size}")
    return eta


def sequential_log_weights(
    means: np.ndarray,
    factor: np.ndarray,
    A: SelectionSet,
    eta: np.ndarray,
    stream: UniformStream,
) -> np.ndarray:
    """
    Log importance weights for a batch of mean vectors sharing one covariance

    Args:
        means: (B, n) mean vectors
        factor: Lower Cholesky factor of the shared covariance
        A: Product selection set over n components
        eta: Mean shift applied to every batch row
        stream: Uniform draws, replayed identically for every row

    Returns:
        (B, N) log weights
    """
    means = np.atleast_2d(means)
    batch, n = means.shape
    n_samples = stream.n_samples
    shifted = means + eta
    h = linalg.solve_triangular(factor, eta, lower=True, check_finite=False)

    log_w = np.zeros((batch, n_samples))
    z = np.empty((batch, n_samples, n))
    for i in range(n):
        pick, within = stream.column(i)
        cond_mean = shifted[:, i, None] + z[:, :, :i] @ factor[i, :i]
        scale = factor[i, i]
        draw, log_mass, _ = sample_union(
            A.lows[i], A.highs[i], A.valid[i], cond_mean, scale, pick, within
        )
        log_w += log_mass
        z[:, :, i] = (draw - cond_mean) / scale

    log_w += -(z @ h) - 0.5 * float(h @ h)
    return log_w


def _summarize(log_w: np.ndarray) -> Tuple[float, float, float]:
    """(log_value, relative_error, largest log weight) of one weight vector"""
    top = float(np.max(log_w))
    if not np.isfinite(top):
        return -np.inf, np.inf, top
    w = np.exp(log_w - top)
    mean_w = float(np.mean(w))
    sd_w = float(np.std(w, ddof=1)) if w.size > 1 else 0.0
    return top + float(np.log(mean_w)), sd_w / (mean_w * np.sqrt(w.size)), top


def _make_estimate(log_value: float, rel: float, n_samples: int, eta: np.ndarray) -> ProbEstimate:
    value = float(np.exp(log_value))
    return ProbEstimate(
        value=value,
        std_error=value * rel,
        n_samples=n_samples,
        mean_shift=eta,
        log_value=log_value,
        relative_error=rel,
    )


def _exact_independent(mu: np.ndarray, sigma: np.ndarray, A: SelectionSet, n_samples: int) -> ProbEstimate:
    std = np.sqrt(np.clip(np.diag(sigma), 0.0, None))
    log_value = float(np.sum(A.log_masses(mu, std)))
    return _make_estimate(log_value, 0.0, n_samples, np.zeros(mu.size))


def estimate_mvn_prob(
    mu: np.ndarray,
    sigma: np.ndarray,
    A: SelectionSet,
    N: int = DEFAULT_N_SAMPLES,
    eta: EtaSpec = "auto",
    seed: Optional[int] = None,
    stream: Optional[UniformStream] = None,
) -> ProbEstimate:
    """
    Estimate Phi_n(A; mu, Sigma)

    Args:
        mu: Mean vector
        sigma: Covariance matrix
        A: Product selection set
        N: Number of importance samples
        eta: "auto", "zero" or an explicit mean-shift vector
        seed: Seed of the uniform stream (ignored when stream is given)
        stream: Frozen uniform stream, replayed exactly on every call

    Raises:
        NumericUnderflowError: if every weight is zero
    """
    mu = np.asarray(mu, dtype=float).reshape(-1)
    sigma = np.asarray(sigma, dtype=float)
    n = mu.size
    if A.q != n:
        raise ParameterDomainError(f"Selection set has {A.q} components, expected {n}")
    if stream is None:
        if N < MIN_N_SAMPLES:
            raise ParameterDomainError(f"N must be at least {MIN_N_SAMPLES}, got {N}")
        stream = UniformStream(resolve_seed(seed), int(N))
    n_samples = stream.n_samples

    shift = _resolve_eta(eta, mu, sigma, A)
    if not np.any(shift):
        if A.is_full:
            return _make_estimate(0.0, 0.0, n_samples, shift)
        if np.count_nonzero(sigma - np.diag(np.diag(sigma))) == 0:
            estimate = _exact_independent(mu, sigma, A, n_samples)
            if not np.isfinite(estimate.log_value):
                raise NumericUnderflowError("Set probability is zero", largest_log_weight=-np.inf)
            return estimate

    factor = cholesky_factor(sigma, label="set-probability covariance")
    log_w = sequential_log_weights(mu[None, :], factor, A, shift, stream)[0]
    log_value, rel, top = _summarize(log_w)
    if not np.isfinite(log_value):
        raise NumericUnderflowError(
            f"All {n_samples} importance weights underflowed (n={n})",
            largest_log_weight=top,
        )
    return _make_estimate(log_value, rel, n_samples, shift)


class ProbEstimator:
    """
    Set-probability estimator with a frozen uniform stream

    Every call replays the same draws, so estimates are deterministic and
    smooth in (mu, Sigma, A).
    """

    def __init__(self, n_samples: int = DEFAULT_N_SAMPLES, seed: int = 0, eta: EtaSpec = "auto"):
        if n_samples < MIN_N_SAMPLES:
            raise ParameterDomainError(f"n_samples must be at least {MIN_N_SAMPLES}, got {n_samples}")
        self.stream = UniformStream(int(seed), int(n_samples))
        self.eta = eta

    @property
    def n_samples(self) -> int:
        return self.stream.n_samples

    def estimate(self, mu: np.ndarray, sigma: np.ndarray, A: SelectionSet, eta: EtaSpec = None) -> ProbEstimate:
        return estimate_mvn_prob(mu, sigma, A, eta=self.eta if eta is None else eta, stream=self.stream)

    def log_estimate_batch(
        self,
        means: np.ndarray,
        sigma: np.ndarray,
        A: SelectionSet,
        eta: Optional[np.ndarray] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        log Phi(A; m_b, Sigma) for many mean vectors sharing one covariance

        Returns:
            (log_values, relative_errors), -inf where all weights underflow
        """
        means = np.atleast_2d(np.asarray(means, dtype=float))
        batch, n = means.shape
        shift = np.zeros(n) if eta is None else np.asarray(eta, dtype=float)
        if A.is_full and not np.any(shift):
            return np.zeros(batch), np.zeros(batch)

        diagonal = np.count_nonzero(sigma - np.diag(np.diag(sigma))) == 0
        if diagonal and not np.any(shift):
            std = np.sqrt(np.clip(np.diag(sigma), 0.0, None))
            return np.sum(A.log_masses(means, std), axis=-1), np.zeros(batch)

        factor = cholesky_factor(sigma, label="set-probability covariance")
        chunk = max(1, WORK_ELEMENTS // max(1, self.n_samples * n))
        log_values = np.empty(batch)
        rel_errors = np.empty(batch)
        for start in range(0, batch, chunk):
            rows = slice(start, min(batch, start + chunk))
            log_w = sequential_log_weights(means[rows], factor, A, shift, self.stream)
            for offset, row_w in enumerate(log_w):
                log_values[start + offset], rel_errors[start + offset], _ = _summarize(row_w)
        return log_values, rel_errors
