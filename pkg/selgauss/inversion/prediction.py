"""
Locationwise predictors and prediction intervals

E and MED are posterior sample means and medians, intervals are sample
quantiles. MAP maximizes each node's marginal posterior density with frozen
Monte Carlo draws: a grid bracket followed by golden-section refinement.
A Gaussian posterior short-circuits everything to closed form.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.stats import norm

from selgauss.config import MapSearchConfig, SamplerConfig
from selgauss.errors import ParameterDomainError
from selgauss.inversion.posterior import PosteriorModel, simulate_posterior
from selgauss.models.selection import Realizations, SelectionGaussianModel
from selgauss.sampling.mvn_prob import ProbEstimator

logger = logging.getLogger(__name__)

CRITERIA = ("E", "MED", "MAP")
DEFAULT_REALIZATIONS = 500


@dataclass
class Predictions:
    """Per-node predictors and (1 - alpha) prediction interval"""
    expectation: np.ndarray
    median: np.ndarray
    map: np.ndarray
    lower: np.ndarray
    upper: np.ndarray
    alpha: float
    n_realizations: int = 0
    map_fallbacks: List[int] = field(default_factory=list)

    def get(self, criterion: str) -> np.ndarray:
        return {"E": self.expectation, "MED": self.median, "MAP": self.map}[criterion]

    def coverage(self, truth: np.ndarray) -> float:
        """Fraction of nodes whose true value lies inside the interval"""
        truth = np.asarray(truth, dtype=float)
        return float(np.mean((truth >= self.lower) & (truth <= self.upper)))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "alpha": self.alpha,
            "n_realizations": self.n_realizations,
            "map_fallbacks": list(self.map_fallbacks),
        }


def _check_alpha(alpha: float) -> None:
    if not 0.0 < alpha < 1.0:
        raise ParameterDomainError(f"quantile_alpha must lie in (0, 1), got {alpha}")


def gaussian_predictions(mean: np.ndarray, std: np.ndarray, alpha: float) -> Predictions:
    """Closed-form predictors of a Gaussian: E = MED = MAP = mean"""
    z = norm.ppf(1.0 - alpha / 2.0)
    mean = np.asarray(mean, dtype=float)
    return Predictions(
        expectation=mean.copy(),
        median=mean.copy(),
        map=mean.copy(),
        lower=mean - z * std,
        upper=mean + z * std,
        alpha=alpha,
    )


def marginal_posterior_density(
    post: PosteriorModel,
    i: int,
    values: Sequence[float],
    estimator: Optional[ProbEstimator] = None,
    seed: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Marginal posterior density of node i on a set of values

    Returns:
        (density, std_error) on the natural scale
    """
    log_density, log_se = post.model.marginal_log_density(i, values, estimator, seed)
    with np.errstate(under="ignore"):
        density = np.exp(log_density)
    return density, density * log_se


def _map_node(post: PosteriorModel, i: int, estimator: ProbEstimator, config: MapSearchConfig) -> Tuple[float, bool]:
    """(argmax, used_fallback) of node i's marginal posterior density"""
    center = float(post.model.mu_r[i])
    std = float(np.sqrt(post.model.sigma_r[i, i]))
    if std <= 1e-12 * max(1.0, abs(center)):
        return center, False

    grid = center + std * np.linspace(-config.half_width_sd, config.half_width_sd, config.n_grid)
    log_density, _ = post.model.marginal_log_density(i, grid, estimator)
    k = int(np.argmax(log_density))
    best = float(grid[k])
    if not np.isfinite(log_density[k]) or k == 0 or k == grid.size - 1:
        logger.warning(f"MAP node {i}: maximum not bracketed, grid argmax {best:.6g} used")
        return best, True

    def objective(t: float) -> float:
        value = post.model.marginal_log_density(i, [t], estimator)[0][0]
        return -value if np.isfinite(value) else np.inf

    try:
        result = minimize_scalar(
            objective,
            bracket=(grid[k - 1], grid[k], grid[k + 1]),
            method="golden",
            options={"xtol": config.xtol},
        )
    except ValueError as exc:
        logger.warning(f"MAP node {i}: refinement failed ({exc}), grid argmax {best:.6g} used")
        return best, True
    if not np.isfinite(result.fun) or -result.fun < log_density[k] or not grid[k - 1] <= result.x <= grid[k + 1]:
        logger.warning(f"MAP node {i}: refinement left the bracket, grid argmax {best:.6g} used")
        return best, True
    return float(result.x), False


def map_predict(
    post: PosteriorModel,
    config: Optional[MapSearchConfig] = None,
    nodes: Optional[Sequence[int]] = None,
) -> Tuple[np.ndarray, List[int]]:
    """
    MAP predictor of every requested node

    Returns:
        (values, fallback_nodes) where values has one entry per node of the model
        (untouched nodes keep the posterior basis mean)
    """
    config = config or MapSearchConfig()
    values = np.array(post.model.mu_r, dtype=float)
    if post.is_gaussian:
        return values, []
    estimator = ProbEstimator(n_samples=config.n_mc, seed=config.seed)
    fallbacks: List[int] = []
    for i in range(post.model.n) if nodes is None else nodes:
        values[i], fell_back = _map_node(post, int(i), estimator, config)
        if fell_back:
            fallbacks.append(int(i))
    return values, fallbacks


def predict_all(
    post: PosteriorModel,
    quantile_alpha: float = 0.2,
    n_samples: int = DEFAULT_REALIZATIONS,
    seed: Optional[int] = None,
    sampler_config: Optional[SamplerConfig] = None,
    map_config: Optional[MapSearchConfig] = None,
    realizations: Optional[Realizations] = None,
    with_map: bool = True,
) -> Predictions:
    """
    E, MED and MAP predictors with simulation-based intervals

    Args:
        post: Posterior model
        quantile_alpha: Interval level; bounds are the alpha/2 and 1 - alpha/2 quantiles
        n_samples: Posterior realizations used for E, MED and the interval
        seed: Seed of the posterior simulation
        sampler_config: Blocked sampler settings
        map_config: MAP search settings
        realizations: Reuse existing posterior realizations instead of simulating
        with_map: Skip the MAP search (MAP column then equals the basis mean)
    """
    _check_alpha(quantile_alpha)
    if post.is_gaussian:
        return gaussian_predictions(post.model.mu_r, np.sqrt(np.clip(np.diag(post.model.sigma_r), 0.0, None)), quantile_alpha)

    if realizations is None:
        realizations = simulate_posterior(post, n_samples, sampler_config, seed)
    if with_map:
        map_values, fallbacks = map_predict(post, map_config)
    else:
        map_values, fallbacks = np.array(post.model.mu_r, dtype=float), []
    return sample_predictions(realizations.samples, quantile_alpha, map_values, fallbacks)


def sample_predictions(
    samples: np.ndarray,
    alpha: float,
    map_values: np.ndarray,
    map_fallbacks: Optional[List[int]] = None,
) -> Predictions:
    """E, MED and interval bounds from realizations (rows)"""
    lower, upper = np.quantile(samples, [alpha / 2.0, 1.0 - alpha / 2.0], axis=0)
    return Predictions(
        expectation=samples.mean(axis=0),
        median=np.median(samples, axis=0),
        map=np.asarray(map_values, dtype=float),
        lower=lower,
        upper=upper,
        alpha=alpha,
        n_realizations=samples.shape[0],
        map_fallbacks=list(map_fallbacks or []),
    )


def prior_predictions(
    model: SelectionGaussianModel,
    quantile_alpha: float = 0.2,
    n_samples: int = DEFAULT_REALIZATIONS,
    seed: Optional[int] = None,
    sampler_config: Optional[SamplerConfig] = None,
) -> Predictions:
    """
    E and MED predictors with intervals of the prior itself (no data)

    The MAP column holds the basis mean.
    """
    _check_alpha(quantile_alpha)
    if model.is_gaussian:
        return gaussian_predictions(model.mu_r, np.sqrt(np.clip(np.diag(model.sigma_r), 0.0, None)), quantile_alpha)
    realizations = model.simulate(n_samples, sampler_config, seed)
    return sample_predictions(realizations.samples, quantile_alpha, model.mu_r)


def predict(
    post: PosteriorModel,
    criterion: str,
    quantile_alpha: float = 0.2,
    n_samples: int = DEFAULT_REALIZATIONS,
    seed: Optional[int] = None,
    sampler_config: Optional[SamplerConfig] = None,
    map_config: Optional[MapSearchConfig] = None,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    One predictor with its prediction interval

    Returns:
        (prediction, lower, upper)
    """
    if criterion not in CRITERIA:
        raise ParameterDomainError(f"Unknown criterion {criterion!r}; expected one of {CRITERIA}")
    predictions = predict_all(
        post,
        quantile_alpha,
        n_samples,
        seed,
        sampler_config,
        map_config,
        with_map=criterion == "MAP",
    )
    return predictions.get(criterion), predictions.lower, predictions.upper
