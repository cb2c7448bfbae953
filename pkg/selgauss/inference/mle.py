"""
Maximum likelihood estimation of stationary prior parameters from one training image

The set-probability term is evaluated with a frozen uniform stream, so the
likelihood surface is deterministic in theta and a derivative-free simplex
search can be run from several Latin hypercube starts.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import minimize, minimize_scalar

from selgauss.config import DEFAULT_BOUNDS, InferenceConfig
from selgauss.core.gaussian import (
    CorrelationSpec,
    GridSpec,
    LOG_2PI,
    build_correlation_matrix,
    cholesky_factor,
)
from selgauss.errors import NumericalError, ParameterDomainError
from selgauss.inference.parameters import ParameterSpace, StationaryParams
from selgauss.models.selection import expand_stationary, log_selection_density
from selgauss.sampling.mvn_prob import ProbEstimator

logger = logging.getLogger(__name__)

# objective value handed to the simplex where the likelihood is not finite
PENALTY = 1e300


@dataclass
class FitResult:
    """Outcome of a multi-start maximum likelihood fit"""
    theta_hat: StationaryParams
    log_lik: float
    restart_values: List[float]
    converged: bool
    restart_estimates: List[Dict[str, float]] = field(default_factory=list)
    n_evaluations: int = 0

    @property
    def restart_spread(self) -> float:
        """Range of the finite restart optima"""
        finite = [v for v in self.restart_values if np.isfinite(v)]
        return float(max(finite) - min(finite)) if finite else float("nan")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "theta_hat": self.theta_hat.to_dict(),
            "log_lik": self.log_lik,
            "restart_values": list(self.restart_values),
            "restart_estimates": list(self.restart_estimates),
            "restart_spread": self.restart_spread,
            "converged": self.converged,
            "n_evaluations": self.n_evaluations,
        }


def log_likelihood(
    theta: StationaryParams,
    r_obs: np.ndarray,
    grid: GridSpec,
    estimator: ProbEstimator,
    correlation_family: str = "second_order_exponential",
    selection_family: str = "symmetric_two_sided",
) -> float:
    """
    Log-likelihood of a complete training image under the stationary prior

    Args:
        theta: (mu, sigma2, d, gamma, a)
        r_obs: Training image, flattened in grid node order
        grid: Grid of the training image
        estimator: Estimator with a frozen uniform stream
        correlation_family: Correlation function family
        selection_family: Selection set parameterization

    Returns:
        log L(theta); -inf when a set probability underflows or the
        covariance cannot be factorized
    """
    r_obs = np.asarray(r_obs, dtype=float).reshape(-1)
    if r_obs.size != grid.n_nodes:
        raise ParameterDomainError(f"Training image has {r_obs.size} values, grid has {grid.n_nodes} nodes")
    model = expand_stationary(theta.to_spec(grid, correlation_family, selection_family))
    try:
        value, _ = log_selection_density(model, r_obs, estimator)
    except NumericalError as exc:
        logger.warning(f"log-likelihood at {theta.as_tuple()} is -inf: {exc}")
        return -np.inf
    return float(value)


@dataclass
class _MultistartOutcome:
    x: np.ndarray
    value: float
    restart_x: List[np.ndarray]
    restart_values: List[float]
    converged: bool
    n_evaluations: int


def multistart_maximize(
    objective: Callable[[np.ndarray], float],
    starts: Sequence[np.ndarray],
    bounds: Optional[Sequence[Tuple[float, float]]],
    tol: float,
    max_iter: int,
) -> _MultistartOutcome:
    """
    Maximize `objective` with a bounded Nelder-Mead run from every start

    converged is False when no restart improved on its starting value.
    """
    evaluations = 0

    def negated(x: np.ndarray) -> float:
        nonlocal evaluations
        evaluations += 1
        value = objective(x)
        return -value if np.isfinite(value) else PENALTY

    restart_x: List[np.ndarray] = []
    restart_values: List[float] = []
    improved = False
    for k, x0 in enumerate(starts):
        start_value = negated(np.asarray(x0, dtype=float))
        result = minimize(
            negated,
            np.asarray(x0, dtype=float),
            method="Nelder-Mead",
            bounds=bounds,
            options={"xatol": tol, "fatol": tol, "maxiter": max_iter},
        )
        value = -result.fun if result.fun < PENALTY else -np.inf
        improved = improved or result.fun < start_value
        restart_x.append(np.asarray(result.x, dtype=float))
        restart_values.append(float(value))
        logger.debug(f"restart {k}: log-lik {value:.6f} after {result.nfev} evaluations")

    best = int(np.argmax(restart_values))
    return _MultistartOutcome(
        x=restart_x[best],
        value=restart_values[best],
        restart_x=restart_x,
        restart_values=restart_values,
        converged=improved and np.isfinite(restart_values[best]),
        n_evaluations=evaluations,
    )


def fit_mle(
    r_obs: np.ndarray,
    grid: GridSpec,
    config: Optional[InferenceConfig] = None,
) -> FitResult:
    """
    Maximum likelihood estimate of (mu, sigma2, d, gamma, a)

    Args:
        r_obs: Complete training image in grid node order
        grid: Grid of the training image
        config: Bounds, Monte Carlo size, restarts and frozen seed

    Returns:
        FitResult with the best restart; converged is False if no restart
        improved on its starting point
    """
    config = config or InferenceConfig()
    space = ParameterSpace(config.param_bounds, config.fixed)
    estimator = ProbEstimator(n_samples=config.n_mc, seed=config.frozen_seed)

    def objective(x: np.ndarray) -> float:
        return log_likelihood(
            space.from_unconstrained(x),
            r_obs,
            grid,
            estimator,
            config.correlation_family,
            config.selection_family,
        )

    starts = [space.to_unconstrained(p) for p in space.latin_hypercube_starts(config.n_restarts, config.frozen_seed)]
    if space.n_free == 0:
        theta = space.from_unconstrained([])
        value = objective(np.zeros(0))
        return FitResult(theta, value, [value], np.isfinite(value), [theta.to_dict()], 1)

    outcome = multistart_maximize(objective, starts, space.transformed_bounds(), config.optimizer_tol, config.max_iter)
    theta_hat = space.from_unconstrained(outcome.x)
    if not outcome.converged:
        logger.warning("MLE: no restart improved on its starting point")
    logger.info(f"MLE fit on {grid.n_nodes} nodes: theta={theta_hat.as_tuple()}, log-lik={outcome.value:.4f}")
    return FitResult(
        theta_hat=theta_hat,
        log_lik=outcome.value,
        restart_values=outcome.restart_values,
        converged=outcome.converged,
        restart_estimates=[space.from_unconstrained(x).to_dict() for x in outcome.restart_x],
        n_evaluations=outcome.n_evaluations,
    )


def gaussian_profile(
    r_obs: np.ndarray,
    corr: np.ndarray,
    design: Optional[np.ndarray] = None,
) -> Tuple[np.ndarray, float, float]:
    """
    Generalized least squares profile of a Gaussian field with correlation corr

    Args:
        r_obs: Observations
        corr: Correlation matrix
        design: Mean design matrix (default: a constant)

    Returns:
        (coefficients, sigma2_hat, profile log-likelihood)
    """
    n = r_obs.size
    design = np.ones((n, 1)) if design is None else design
    factor = cholesky_factor(corr, label="correlation matrix")
    white_x = linalg.solve_triangular(factor, design, lower=True, check_finite=False)
    white_r = linalg.solve_triangular(factor, r_obs, lower=True, check_finite=False)
    coef, *_ = np.linalg.lstsq(white_x, white_r, rcond=None)
    resid = white_r - white_x @ coef
    sigma2 = float(resid @ resid) / n
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))
    log_lik = -0.5 * (n * (LOG_2PI + np.log(sigma2) + 1.0) + log_det)
    return coef, sigma2, log_lik


def fit_gaussian_mle(
    r_obs: np.ndarray,
    grid: GridSpec,
    family: str = "second_order_exponential",
    bounds: Optional[Dict[str, Tuple[float, float]]] = None,
    tol: float = 1e-6,
) -> FitResult:
    """
    Pure Gaussian fit (gamma = 0, no selection) by profile likelihood in d

    mu and sigma2 have closed forms given d; d is found by bounded scalar
    search on the log scale.
    """
    r_obs = np.asarray(r_obs, dtype=float).reshape(-1)
    d_lo, d_hi = (bounds or DEFAULT_BOUNDS)["d"]
    evaluations = 0

    def negative_profile(log_d: float) -> float:
        nonlocal evaluations
        evaluations += 1
        corr = build_correlation_matrix(grid, CorrelationSpec(family, (float(np.exp(log_d)),)))
        try:
            return -gaussian_profile(r_obs, corr)[2]
        except NumericalError:
            return PENALTY

    result = minimize_scalar(
        negative_profile,
        bounds=(np.log(d_lo), np.log(d_hi)),
        method="bounded",
        options={"xatol": tol},
    )
    d_hat = float(np.exp(result.x))
    corr = build_correlation_matrix(grid, CorrelationSpec(family, (d_hat,)))
    coef, sigma2, log_lik = gaussian_profile(r_obs, corr)
    theta = StationaryParams(mu=float(coef[0]), sigma2=sigma2, d=d_hat, gamma=0.0, a=0.0)
    logger.info(f"Gaussian fit: mu={theta.mu:.4f}, sigma2={sigma2:.4f}, d={d_hat:.4f}")
    return FitResult(
        theta_hat=theta,
        log_lik=float(log_lik),
        restart_values=[float(log_lik)],
        converged=bool(result.success),
        restart_estimates=[theta.to_dict()],
        n_evaluations=evaluations,
    )
