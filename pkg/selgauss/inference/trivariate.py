"""
Maximum likelihood fits of the trivariate profile prior

The depth trend is held at a supplied (usually least squares) line. The
Gaussian alternative has a closed-form inter-variable covariance given the
range; the selection prior is fitted by the same restart and simplex engine
as the stationary single-variable prior.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import minimize_scalar
from scipy.stats import qmc

from selgauss.config import InferenceConfig
from selgauss.core.gaussian import LOG_2PI, cholesky_factor
from selgauss.errors import NumericalError, ParameterDomainError
from selgauss.inference.mle import PENALTY, multistart_maximize
from selgauss.inference.parameters import TRANSFORMS
from selgauss.models.selection import log_selection_density
from selgauss.sampling.mvn_prob import ProbEstimator
from selgauss.seismic.forward import N_VARIABLES
from selgauss.seismic.prior import TrivariatePriorSpec

logger = logging.getLogger(__name__)

_TRIL = np.tril_indices(N_VARIABLES)
_N_CHOL = len(_TRIL[0])


@dataclass
class TrivariateFit:
    """Fitted trivariate prior with its optimizer record"""
    prior: TrivariatePriorSpec
    log_lik: float
    restart_values: List[float] = field(default_factory=list)
    converged: bool = True
    n_evaluations: int = 0

    def to_dict(self) -> Dict[str, Any]:
        return {
            "prior": self.prior.to_dict(),
            "log_lik": self.log_lik,
            "restart_values": list(self.restart_values),
            "converged": self.converged,
            "n_evaluations": self.n_evaluations,
        }


def _profile_matrix(r_obs: np.ndarray, n: int) -> np.ndarray:
    r_obs = np.asarray(r_obs, dtype=float).reshape(-1)
    if r_obs.size != N_VARIABLES * n:
        raise ParameterDomainError(f"Profile has {r_obs.size} values, expected {N_VARIABLES * n}")
    return r_obs.reshape(N_VARIABLES, n)


def trivariate_gaussian_profile(residuals: np.ndarray, corr: np.ndarray) -> Tuple[np.ndarray, float]:
    """
    (Sigma_hat, profile log-likelihood) of residuals R (3 x n) under Sigma (x) C

    Sigma_hat = R C^-1 R^T / n.
    """
    n = residuals.shape[1]
    factor = cholesky_factor(corr, label="profile correlation")
    white = linalg.solve_triangular(factor, residuals.T, lower=True, check_finite=False)
    sigma = white.T @ white / n
    sign, log_det_sigma = np.linalg.slogdet(sigma)
    if sign <= 0:
        raise NumericalError("Profile covariance estimate is singular")
    log_det_corr = 2.0 * float(np.sum(np.log(np.diag(factor))))
    k = residuals.shape[0]
    log_lik = -0.5 * (k * n * (LOG_2PI + 1.0) + n * log_det_sigma + k * log_det_corr)
    return sigma, float(log_lik)


def fit_trivariate_gaussian(
    r_obs: np.ndarray,
    n: int,
    trend: np.ndarray,
    bounds: Tuple[float, float] = (0.5, 8.0),
    tol: float = 1e-6,
) -> TrivariateFit:
    """
    Gaussian profile prior (gamma = 0, no selection) with the trend held fixed

    Sigma has a closed form given d_r; d_r is found by bounded scalar search
    on the log scale.
    """
    template = TrivariatePriorSpec(n, trend, np.eye(N_VARIABLES), np.zeros(N_VARIABLES), 1.0, np.zeros(N_VARIABLES))
    residuals = _profile_matrix(r_obs, n) - template.mean().reshape(N_VARIABLES, n)
    evaluations = 0

    def negative_profile(log_d: float) -> float:
        nonlocal evaluations
        evaluations += 1
        spec = TrivariatePriorSpec(n, trend, np.eye(N_VARIABLES), np.zeros(N_VARIABLES), float(np.exp(log_d)),
                                   np.zeros(N_VARIABLES))
        try:
            return -trivariate_gaussian_profile(residuals, spec.correlation())[1]
        except NumericalError:
            return PENALTY

    result = minimize_scalar(negative_profile, bounds=tuple(np.log(bounds)), method="bounded", options={"xatol": tol})
    d_hat = float(np.exp(result.x))
    corr = TrivariatePriorSpec(n, trend, np.eye(N_VARIABLES), np.zeros(N_VARIABLES), d_hat,
                               np.zeros(N_VARIABLES)).correlation()
    sigma, log_lik = trivariate_gaussian_profile(residuals, corr)
    prior = TrivariatePriorSpec(n, trend, sigma, np.zeros(N_VARIABLES), d_hat, np.zeros(N_VARIABLES))
    logger.info(f"Trivariate Gaussian fit: d_r={d_hat:.4f}, log-lik={log_lik:.4f}")
    return TrivariateFit(prior, log_lik, [log_lik], bool(result.success), evaluations)


def trivariate_log_likelihood(prior: TrivariatePriorSpec, r_obs: np.ndarray, estimator: ProbEstimator) -> float:
    """log L of a complete profile; -inf when a set probability underflows"""
    try:
        value, _ = log_selection_density(prior.to_model(), np.asarray(r_obs, dtype=float).reshape(-1), estimator)
    except NumericalError as exc:
        logger.warning(f"trivariate log-likelihood is -inf: {exc}")
        return -np.inf
    return float(value)


class TrivariateSpace:
    """
    Unconstrained coordinates of (Sigma, gamma, d_r, a)

    Sigma uses a log-Cholesky factor, the rest reuse the scalar transforms.
    """

    def __init__(self, n: int, trend: np.ndarray, bounds: Dict[str, Tuple[float, float]]):
        self.n = n
        self.trend = np.asarray(trend, dtype=float)
        self.bounds = {name: tuple(bounds[name]) for name in ("gamma", "d", "a")}

    def to_unconstrained(self, prior: TrivariatePriorSpec) -> np.ndarray:
        chol = np.linalg.cholesky(prior.sigma)
        chol[np.diag_indices(N_VARIABLES)] = np.log(np.diag(chol))
        gamma_fwd, d_fwd, a_fwd = (TRANSFORMS[name][0] for name in ("gamma", "d", "a"))
        return np.concatenate([
            chol[_TRIL],
            [gamma_fwd(g) for g in prior.gamma],
            [d_fwd(prior.d_r)],
            [a_fwd(a) for a in prior.a],
        ])

    def from_unconstrained(self, x: np.ndarray) -> TrivariatePriorSpec:
        x = np.asarray(x, dtype=float)
        chol = np.zeros((N_VARIABLES, N_VARIABLES))
        chol[_TRIL] = x[:_N_CHOL]
        chol[np.diag_indices(N_VARIABLES)] = np.exp(np.diag(chol))
        rest = x[_N_CHOL:]

        def back(name: str, values: np.ndarray) -> np.ndarray:
            lo, hi = self.bounds[name]
            return np.clip([TRANSFORMS[name][1](v) for v in values], lo, hi)

        gamma = back("gamma", rest[:N_VARIABLES])
        d_r = float(back("d", rest[N_VARIABLES:N_VARIABLES + 1])[0])
        a = back("a", rest[N_VARIABLES + 1:])
        sigma = chol @ chol.T
        return TrivariatePriorSpec(self.n, self.trend, 0.5 * (sigma + sigma.T), gamma, d_r, a)

    def transformed_bounds(self) -> List[Tuple[Optional[float], Optional[float]]]:
        def forward(name: str) -> Tuple[float, float]:
            return tuple(TRANSFORMS[name][0](v) for v in self.bounds[name])

        return ([(None, None)] * _N_CHOL + [forward("gamma")] * N_VARIABLES + [forward("d")]
                + [forward("a")] * N_VARIABLES)

    def starts(self, base: TrivariatePriorSpec, n_starts: int, seed: int) -> List[TrivariatePriorSpec]:
        """base first, then Latin hypercube draws of (gamma, a) around base's Sigma and d_r"""
        starts = [base]
        if n_starts > 1:
            sampler = qmc.LatinHypercube(d=2 * N_VARIABLES, seed=seed)
            lows = [self.bounds["gamma"][0]] * N_VARIABLES + [self.bounds["a"][0]] * N_VARIABLES
            highs = [self.bounds["gamma"][1]] * N_VARIABLES + [self.bounds["a"][1]] * N_VARIABLES
            for point in qmc.scale(sampler.random(n_starts - 1), lows, highs):
                starts.append(TrivariatePriorSpec(self.n, self.trend, base.sigma, point[:N_VARIABLES], base.d_r,
                                                  point[N_VARIABLES:]))
        return starts


def fit_trivariate_selection(
    r_obs: np.ndarray,
    n: int,
    trend: np.ndarray,
    config: Optional[InferenceConfig] = None,
    start: Optional[TrivariatePriorSpec] = None,
) -> TrivariateFit:
    """
    Maximum likelihood selection prior for one complete profile

    Args:
        r_obs: Stacked (log vp, log vs, log rho) profile
        n: Samples per variable
        trend: (3, 2) fixed trend coefficients
        config: Bounds for gamma, d and a, Monte Carlo size, restarts, frozen seed
        start: First starting point (default: the Gaussian fit with mid-range gamma and a)

    Returns:
        TrivariateFit with the best restart
    """
    config = config or InferenceConfig()
    r_obs = _profile_matrix(r_obs, n).reshape(-1)
    space = TrivariateSpace(n, trend, config.param_bounds)
    if start is None:
        gaussian = fit_trivariate_gaussian(r_obs, n, trend, space.bounds["d"], config.optimizer_tol).prior
        start = TrivariatePriorSpec(n, trend, gaussian.sigma, np.full(N_VARIABLES, np.mean(space.bounds["gamma"])),
                                    gaussian.d_r, np.full(N_VARIABLES, np.mean(space.bounds["a"])))
    estimator = ProbEstimator(n_samples=config.n_mc, seed=config.frozen_seed)

    def objective(x: np.ndarray) -> float:
        return trivariate_log_likelihood(space.from_unconstrained(x), r_obs, estimator)

    starts = [space.to_unconstrained(s) for s in space.starts(start, config.n_restarts, config.frozen_seed)]
    outcome = multistart_maximize(objective, starts, space.transformed_bounds(), config.optimizer_tol, config.max_iter)
    prior = space.from_unconstrained(outcome.x)
    if not outcome.converged:
        logger.warning("Trivariate fit: no restart improved on its starting point")
    logger.info(
        f"Trivariate selection fit: gamma={np.round(prior.gamma, 4).tolist()}, "
        f"a={np.round(prior.a, 4).tolist()}, d_r={prior.d_r:.4f}, log-lik={outcome.value:.4f}"
    )
    return TrivariateFit(prior, outcome.value, outcome.restart_values, outcome.converged, outcome.n_evaluations)
