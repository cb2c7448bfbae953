"""
Exact posterior of a selection Gaussian prior under a Gauss-linear likelihood

The posterior is again selection Gaussian. Since d depends on nu only through
r, the law of nu given (r, d) equals the prior's nu given r; conditioning only
moves the basis to N(mu_r|d, Sigma_r|d) and shifts mu_nu accordingly.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from selgauss.config import SamplerConfig
from selgauss.core.gaussian import GaussianParams, cholesky_factor, log_gaussian_pdf
from selgauss.errors import ParameterDomainError
from selgauss.inversion.likelihood import GaussLinearLikelihood
from selgauss.models.selection import ExtendedGaussian, Realizations, SelectionGaussianModel, get_estimator
from selgauss.sampling.mvn_prob import ProbEstimator

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class PosteriorModel:
    """Selection Gaussian posterior of r given d, with its prior for reference"""
    model: SelectionGaussianModel
    prior: SelectionGaussianModel

    @property
    def mu_r_d(self) -> np.ndarray:
        return self.model.mu_r

    @property
    def sigma_r_d(self) -> np.ndarray:
        return self.model.sigma_r

    @property
    def mu_nu_d(self) -> np.ndarray:
        return self.model.mu_nu

    @property
    def sigma_nu_d(self) -> np.ndarray:
        return self.model.sigma_nu

    @property
    def gamma_r_nu_d(self) -> np.ndarray:
        """Cov(r, nu | d)"""
        return self.model.cross

    @property
    def is_gaussian(self) -> bool:
        return self.model.is_gaussian

    def extended(self) -> ExtendedGaussian:
        return self.model.extended()

    def as_selection_model(self) -> SelectionGaussianModel:
        return self.model

    def to_dict(self) -> Dict[str, Any]:
        return self.model.to_dict()


def joint_gaussian(prior: SelectionGaussianModel, lik: GaussLinearLikelihood) -> GaussianParams:
    """Joint Gaussian of [r; nu; d] before selection"""
    _check_dimensions(prior, lik)
    H = lik.H
    cross = prior.cross
    mean = np.concatenate([prior.mu_r, prior.mu_nu, H @ prior.mu_r])
    cov = np.block([
        [prior.sigma_r, cross, prior.sigma_r @ H.T],
        [cross.T, prior.sigma_nu, cross.T @ H.T],
        [H @ prior.sigma_r, H @ cross, H @ prior.sigma_r @ H.T + lik.sigma_d_r],
    ])
    return GaussianParams(mean, 0.5 * (cov + cov.T))


def _check_dimensions(prior: SelectionGaussianModel, lik: GaussLinearLikelihood) -> None:
    if lik.n_model != prior.n:
        raise ParameterDomainError(f"H has {lik.n_model} columns but the model has n={prior.n}")


def _data_marginal(prior: SelectionGaussianModel, lik: GaussLinearLikelihood) -> Tuple[np.ndarray, np.ndarray]:
    cov = lik.H @ prior.sigma_r @ lik.H.T + lik.sigma_d_r
    return lik.H @ prior.mu_r, 0.5 * (cov + cov.T)


def posterior_model(
    prior: SelectionGaussianModel,
    lik: GaussLinearLikelihood,
    d: np.ndarray,
) -> PosteriorModel:
    """
    Condition a selection Gaussian prior on Gauss-linear data

    Args:
        prior: General-form prior
        lik: Observation operator and noise
        d: Observed data

    Returns:
        PosteriorModel whose general form has basis N(mu_r|d, Sigma_r|d), the
        prior's coupling and conditional covariance, and
        mu_nu|d = mu_nu + Gamma (mu_r|d - mu_r)

    Raises:
        LinearAlgebraError: if the data covariance cannot be factorized
    """
    _check_dimensions(prior, lik)
    d = np.asarray(d, dtype=float).reshape(-1)
    if d.size != lik.n_data:
        raise ParameterDomainError(f"Got {d.size} data values for {lik.n_data} observations")

    data_mean, data_cov = _data_marginal(prior, lik)
    factor = cholesky_factor(data_cov, label="data covariance")
    sigma_rd = prior.sigma_r @ lik.H.T
    # K = Sigma_r H^T (H Sigma_r H^T + Sigma_d|r)^-1
    gain = linalg.cho_solve((factor, True), sigma_rd.T, check_finite=False).T
    mu_r_d = prior.mu_r + gain @ (d - data_mean)
    sigma_r_d = prior.sigma_r - gain @ sigma_rd.T
    sigma_r_d = 0.5 * (sigma_r_d + sigma_r_d.T)
    np.fill_diagonal(sigma_r_d, np.clip(np.diag(sigma_r_d), 0.0, None))
    mu_nu_d = prior.mu_nu + prior.gamma_nu_r @ (mu_r_d - prior.mu_r)

    model = SelectionGaussianModel(
        mu_r=mu_r_d,
        sigma_r=sigma_r_d,
        mu_nu=mu_nu_d,
        gamma_nu_r=prior.gamma_nu_r,
        sigma_nu_r=prior.sigma_nu_r,
        selection=prior.selection,
    )
    logger.debug(f"Posterior computed: n={prior.n}, n_d={lik.n_data}, gaussian={model.is_gaussian}")
    return PosteriorModel(model=model, prior=prior)


def simulate_posterior(
    post: PosteriorModel,
    n_samples: int,
    sampler_config: Optional[SamplerConfig] = None,
    seed: Optional[int] = None,
) -> Realizations:
    """Posterior realizations: nu in A given d from the blocked sampler, then r given (nu, d)"""
    realizations = post.model.simulate(n_samples, sampler_config, seed)
    logger.info(
        f"Simulated {realizations.n_samples} posterior realizations "
        f"(acceptance {realizations.acceptance_rate:.3f})"
    )
    return realizations


def log_data_marginal(
    prior: SelectionGaussianModel,
    lik: GaussLinearLikelihood,
    d: np.ndarray,
    estimator: Optional[ProbEstimator] = None,
    seed: Optional[int] = None,
) -> Tuple[float, float]:
    """
    log f(d) = log Phi_q(A; mu_nu|d, Sigma_nu|d) - log Phi_q(A; mu_nu, Sigma_nu) + log phi(d; H mu_r, H Sigma_r H^T + Sigma_d|r)

    Returns:
        (log_density, std_error) with the error on the log scale
    """
    d = np.asarray(d, dtype=float).reshape(-1)
    data_mean, data_cov = _data_marginal(prior, lik)
    log_gauss = log_gaussian_pdf(d, GaussianParams(data_mean, data_cov))
    if prior.is_gaussian:
        return log_gauss, 0.0

    estimator = get_estimator(estimator, seed)
    post = posterior_model(prior, lik, d)
    normalizer = prior.log_normalizer(estimator)
    numerator = post.model.log_normalizer(estimator)
    return (
        log_gauss + numerator.log_value - normalizer.log_value,
        float(np.hypot(numerator.relative_error, normalizer.relative_error)),
    )
