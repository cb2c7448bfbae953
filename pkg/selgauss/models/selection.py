"""
Selection Gaussian models

General form (mu_r, Sigma_r, mu_nu, Gamma, Sigma_nu|r, A): r is Gaussian, the
auxiliary nu given r is N(mu_nu + Gamma (r - mu_r), Sigma_nu|r), and the model
is the law of r given nu in A. Densities are computed from this conditional
form so Sigma_r is never inverted; simulation draws nu in A first and then r
given nu from the joint [r; nu] blocks (ExtendedGaussian).
"""
import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.stats import norm

from selgauss.config import SamplerConfig
from selgauss.core.gaussian import (
    CorrelationSpec,
    GaussianParams,
    GridSpec,
    build_correlation_matrix,
    cholesky_factor,
    log_gaussian_pdf,
    resolve_seed,
    sample_gaussian,
)
from selgauss.errors import ParameterDomainError
from selgauss.models.selection_sets import IntervalUnion, SelectionSet
from selgauss.sampling.mvn_prob import ProbEstimate, ProbEstimator, choose_mean_shift
from selgauss.sampling.tmvn import Chain, sample_tmvn

logger = logging.getLogger(__name__)

GAMMA_CLAMP = 1.0 - 1e-6

ArrayLike = Union[float, Sequence[float], np.ndarray]


def _readonly(values: Any, dims: int) -> np.ndarray:
    array = np.array(values, dtype=float)
    if dims == 1:
        array = array.reshape(-1)
    elif array.ndim != 2:
        raise ParameterDomainError(f"Expected a matrix, got shape {array.shape}")
    array.setflags(write=False)
    return array


def _is_diagonal(matrix: np.ndarray) -> bool:
    return np.count_nonzero(matrix - np.diag(np.diag(matrix))) == 0


def get_estimator(estimator: Optional[ProbEstimator], seed: Optional[int]) -> ProbEstimator:
    if estimator is not None:
        return estimator
    return ProbEstimator(seed=resolve_seed(seed))


@dataclass
class Realizations:
    """Simulated realizations of r (rows), with the auxiliary draws that produced them"""
    samples: np.ndarray
    seed: int
    auxiliary: Optional[np.ndarray] = None
    chain: Optional[Chain] = None

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    @property
    def acceptance_rate(self) -> float:
        return 1.0 if self.chain is None else self.chain.acceptance_rate

    def to_dict(self) -> Dict[str, Any]:
        return {
            "seed": self.seed,
            "n_samples": self.n_samples,
            "acceptance_rate": self.acceptance_rate,
            "chain": None if self.chain is None else self.chain.to_dict(),
        }


@dataclass(frozen=True, eq=False)
class ExtendedGaussian:
    """
    Joint Gaussian of [r; nu] in block form plus the selection set on nu

    cross is Cov(r, nu), shape (n, q).
    """
    mu_r: np.ndarray
    sigma_r: np.ndarray
    mu_nu: np.ndarray
    sigma_nu: np.ndarray
    cross: np.ndarray
    selection: SelectionSet

    def __post_init__(self):
        for name, dims in (("mu_r", 1), ("sigma_r", 2), ("mu_nu", 1), ("sigma_nu", 2), ("cross", 2)):
            object.__setattr__(self, name, _readonly(getattr(self, name), dims))
        n, q = self.mu_r.size, self.mu_nu.size
        if self.sigma_r.shape != (n, n) or self.sigma_nu.shape != (q, q) or self.cross.shape != (n, q):
            raise ParameterDomainError(
                f"Inconsistent block shapes: sigma_r {self.sigma_r.shape}, "
                f"sigma_nu {self.sigma_nu.shape}, cross {self.cross.shape} for n={n}, q={q}"
            )
        if self.selection.q != q:
            raise ParameterDomainError(f"Selection set has {self.selection.q} components, expected {q}")

    @classmethod
    def from_joint(cls, joint: GaussianParams, n: int, selection: SelectionSet) -> "ExtendedGaussian":
        """Split a joint Gaussian over [r; nu] whose first n components are r"""
        return cls(
            mu_r=joint.mean[:n],
            sigma_r=joint.cov[:n, :n],
            mu_nu=joint.mean[n:],
            sigma_nu=joint.cov[n:, n:],
            cross=joint.cov[:n, n:],
            selection=selection,
        )

    @property
    def n(self) -> int:
        return self.mu_r.size

    @property
    def q(self) -> int:
        return self.mu_nu.size

    @property
    def is_gaussian(self) -> bool:
        return self.selection.is_full or not np.any(self.cross)

    def joint(self) -> GaussianParams:
        cov = np.block([[self.sigma_r, self.cross], [self.cross.T, self.sigma_nu]])
        return GaussianParams(np.concatenate([self.mu_r, self.mu_nu]), cov)

    def r_given_nu(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Gain and covariance of r given nu

        Returns:
            (gain, cond_cov) with gain = Cov(r, nu) Sigma_nu^-1
        """
        factor = cholesky_factor(self.sigma_nu, label="auxiliary covariance")
        gain = linalg.cho_solve((factor, True), self.cross.T, check_finite=False).T
        cond = self.sigma_r - gain @ self.cross.T
        return gain, 0.5 * (cond + cond.T)

    def simulate(
        self,
        n_samples: int,
        config: Optional[SamplerConfig] = None,
        seed: Optional[int] = None,
    ) -> Realizations:
        """
        Draw nu from N(mu_nu, Sigma_nu) restricted to A, then r given nu

        The chain consumes `seed`; the Gaussian stage uses an independent
        stream derived from it.
        """
        seed = resolve_seed(seed)
        rng = np.random.default_rng([seed, 1])
        if self.is_gaussian:
            samples = sample_gaussian(self.mu_r, self.sigma_r, rng, n_samples)
            return Realizations(samples=samples, seed=seed)

        chain = sample_tmvn(self.mu_nu, self.sigma_nu, self.selection, n_samples, config, seed)
        gain, cond_cov = self.r_given_nu()
        means = self.mu_r + (chain.samples - self.mu_nu) @ gain.T
        samples = sample_gaussian(np.zeros(self.n), cond_cov, rng, n_samples) + means
        return Realizations(samples=samples, seed=seed, auxiliary=chain.samples, chain=chain)


@dataclass(frozen=True, eq=False)
class SelectionGaussianModel:
    """
    Selection Gaussian model in general form

    Fields follow the serialized schema: mu_r, sigma_r, mu_nu, gamma_nu_r,
    sigma_nu_r and selection.
    """
    mu_r: np.ndarray
    sigma_r: np.ndarray
    mu_nu: np.ndarray
    gamma_nu_r: np.ndarray
    sigma_nu_r: np.ndarray
    selection: SelectionSet
    _normalizers: Dict[Any, ProbEstimate] = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        for name, dims in (("mu_r", 1), ("sigma_r", 2), ("mu_nu", 1), ("gamma_nu_r", 2), ("sigma_nu_r", 2)):
            object.__setattr__(self, name, _readonly(getattr(self, name), dims))
        n, q = self.mu_r.size, self.mu_nu.size
        if self.sigma_r.shape != (n, n):
            raise ParameterDomainError(f"sigma_r shape {self.sigma_r.shape} does not match n={n}")
        if self.gamma_nu_r.shape != (q, n):
            raise ParameterDomainError(f"gamma_nu_r shape {self.gamma_nu_r.shape}, expected ({q}, {n})")
        if self.sigma_nu_r.shape != (q, q):
            raise ParameterDomainError(f"sigma_nu_r shape {self.sigma_nu_r.shape}, expected ({q}, {q})")
        if self.selection.q != q:
            raise ParameterDomainError(f"Selection set has {self.selection.q} components, expected {q}")
        for name in ("sigma_r", "sigma_nu_r"):
            matrix = getattr(self, name)
            scale = max(float(np.max(np.abs(matrix))), np.finfo(float).tiny)
            if np.max(np.abs(matrix - matrix.T)) > 1e-12 * scale:
                raise ParameterDomainError(f"{name} is not symmetric")
            if np.any(np.diag(matrix) < 0):
                raise ParameterDomainError(f"{name} has negative variances")

    @property
    def n(self) -> int:
        return self.mu_r.size

    @property
    def q(self) -> int:
        return self.mu_nu.size

    @property
    def is_gaussian(self) -> bool:
        """True when the selection has no effect on r"""
        return self.selection.is_full or not np.any(self.gamma_nu_r)

    @cached_property
    def cross(self) -> np.ndarray:
        """Cov(r, nu) = Sigma_r Gamma^T"""
        return _readonly(self.sigma_r @ self.gamma_nu_r.T, 2)

    @cached_property
    def sigma_nu(self) -> np.ndarray:
        """Sigma_nu = Gamma Sigma_r Gamma^T + Sigma_nu|r"""
        cov = self.gamma_nu_r @ self.cross + self.sigma_nu_r
        return _readonly(0.5 * (cov + cov.T), 2)

    def extended(self) -> ExtendedGaussian:
        return ExtendedGaussian(self.mu_r, self.sigma_r, self.mu_nu, self.sigma_nu, self.cross, self.selection)

    def basis(self) -> GaussianParams:
        return GaussianParams(self.mu_r, self.sigma_r)

    def nu_given_r_mean(self, r: np.ndarray) -> np.ndarray:
        return self.mu_nu + (np.asarray(r, dtype=float) - self.mu_r) @ self.gamma_nu_r.T

    def log_normalizer(self, estimator: ProbEstimator) -> ProbEstimate:
        """Phi_q(A; mu_nu, Sigma_nu), cached per frozen uniform stream"""
        key = (estimator.stream, repr(estimator.eta))
        cached = self._normalizers.get(key)
        if cached is None:
            cached = estimator.estimate(self.mu_nu, self.sigma_nu, self.selection)
            self._normalizers[key] = cached
        return cached

    def log_density(
        self,
        r: ArrayLike,
        estimator: Optional[ProbEstimator] = None,
        seed: Optional[int] = None,
    ) -> Tuple[float, float]:
        return log_selection_density(self, r, estimator, seed)

    def marginal_log_density(
        self,
        i: int,
        values: ArrayLike,
        estimator: Optional[ProbEstimator] = None,
        seed: Optional[int] = None,
    ) -> Tuple[np.ndarray, np.ndarray]:
        """
        log f(r_i = t) for every t in values

        Returns:
            (log_density, std_error) arrays; std_error is on the log scale
        """
        if not 0 <= int(i) < self.n:
            raise ParameterDomainError(f"Node index {i} out of range for n={self.n}")
        i = int(i)
        t = np.atleast_1d(np.asarray(values, dtype=float))
        mean_i = self.mu_r[i]
        var_i = self.sigma_r[i, i]
        if var_i <= 0:
            raise ParameterDomainError(f"Node {i} has zero marginal variance")
        log_basis = norm.logpdf(t, loc=mean_i, scale=np.sqrt(var_i))
        if self.is_gaussian:
            return log_basis, np.zeros_like(t)

        estimator = get_estimator(estimator, seed)
        normalizer = self.log_normalizer(estimator)
        g = self.cross[i]
        cov = self.sigma_nu - np.outer(g, g) / var_i
        means = self.mu_nu + np.outer((t - mean_i) / var_i, g)
        eta = choose_mean_shift(self.mu_nu, cov, self.selection) if estimator.eta == "auto" else None
        log_num, rel_num = estimator.log_estimate_batch(means, 0.5 * (cov + cov.T), self.selection, eta)
        log_density = log_basis + log_num - normalizer.log_value
        return log_density, np.hypot(rel_num, normalizer.relative_error)

    def simulate(
        self,
        n_samples: int,
        config: Optional[SamplerConfig] = None,
        seed: Optional[int] = None,
    ) -> Realizations:
        return self.extended().simulate(n_samples, config, seed)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu_r": self.mu_r.tolist(),
            "sigma_r": self.sigma_r.tolist(),
            "mu_nu": self.mu_nu.tolist(),
            "gamma_nu_r": self.gamma_nu_r.tolist(),
            "sigma_nu_r": self.sigma_nu_r.tolist(),
            "selection": self.selection.to_json(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "SelectionGaussianModel":
        expected = {"mu_r", "sigma_r", "mu_nu", "gamma_nu_r", "sigma_nu_r", "selection"}
        missing = expected - set(data)
        extra = set(data) - expected
        if missing or extra:
            raise ParameterDomainError(
                f"Model document fields mismatch (missing {sorted(missing)}, unknown {sorted(extra)})"
            )
        return cls(
            mu_r=data["mu_r"],
            sigma_r=data["sigma_r"],
            mu_nu=data["mu_nu"],
            gamma_nu_r=data["gamma_nu_r"],
            sigma_nu_r=data["sigma_nu_r"],
            selection=SelectionSet.from_json(data["selection"]),
        )


@dataclass(frozen=True)
class StationaryPriorSpec:
    """Stationary selection Gaussian prior on a regular grid"""
    mu: float
    sigma2: float
    gamma: float
    corr: CorrelationSpec
    grid: GridSpec
    a_set: IntervalUnion

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ParameterDomainError(f"sigma2 must be positive, got {self.sigma2}")
        if not -1.0 <= self.gamma <= 1.0:
            raise ParameterDomainError(f"gamma must lie in [-1, 1], got {self.gamma}")
        object.__setattr__(self, "mu", float(self.mu))
        object.__setattr__(self, "sigma2", float(self.sigma2))
        object.__setattr__(self, "gamma", float(self.gamma))

    def to_dict(self) -> Dict[str, Any]:
        return {
            "mu": self.mu,
            "sigma2": self.sigma2,
            "gamma": self.gamma,
            "correlation": self.corr.to_dict(),
            "grid": self.grid.to_dict(),
            "a_set": self.a_set.to_json(),
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "StationaryPriorSpec":
        return cls(
            mu=data["mu"],
            sigma2=data["sigma2"],
            gamma=data["gamma"],
            corr=CorrelationSpec(data["correlation"]["family"], tuple(data["correlation"]["ranges"])),
            grid=GridSpec(tuple(data["grid"]["dims"])),
            a_set=IntervalUnion.from_json(data["a_set"]),
        )


def expand_stationary(spec: StationaryPriorSpec) -> SelectionGaussianModel:
    """
    General form of a stationary prior

    mu_r = mu 1, Sigma_r = sigma2 C, mu_nu = 0, Gamma = gamma / sigma I and
    Sigma_nu|r = (1 - gamma^2) I, so that Sigma_nu = gamma^2 C + (1 - gamma^2) I.
    |gamma| is clamped below one to keep Sigma_nu|r nonsingular.
    """
    gamma = float(np.clip(spec.gamma, -GAMMA_CLAMP, GAMMA_CLAMP))
    if gamma != spec.gamma:
        logger.debug(f"gamma {spec.gamma} clamped to {gamma}")
    n = spec.grid.n_nodes
    corr = build_correlation_matrix(spec.grid, spec.corr)
    sigma = np.sqrt(spec.sigma2)
    eye = np.eye(n)
    return SelectionGaussianModel(
        mu_r=np.full(n, spec.mu),
        sigma_r=spec.sigma2 * corr,
        mu_nu=np.zeros(n),
        gamma_nu_r=(gamma / sigma) * eye,
        sigma_nu_r=(1.0 - gamma ** 2) * eye,
        selection=SelectionSet.replicate(spec.a_set, n),
    )


def log_selection_density(
    model: SelectionGaussianModel,
    r: ArrayLike,
    estimator: Optional[ProbEstimator] = None,
    seed: Optional[int] = None,
) -> Tuple[float, float]:
    """
    log f(r) = log Phi_q(A; mu_nu|r, Sigma_nu|r) - log Phi_q(A; mu_nu, Sigma_nu) + log phi_n(r)

    Args:
        model: General-form model
        r: Point of dimension n
        estimator: Set-probability estimator shared by both terms
        seed: Seed of a fresh estimator when none is given

    Returns:
        (log_density, std_error) with the Monte Carlo error on the log scale;
        the Gaussian reduction is exact with zero error

    Raises:
        NumericUnderflowError: if a set probability estimate is zero
    """
    r = np.asarray(r, dtype=float).reshape(-1)
    if r.size != model.n:
        raise ParameterDomainError(f"Point has {r.size} components, expected {model.n}")
    log_basis = log_gaussian_pdf(r, model.basis())
    if model.is_gaussian:
        return log_basis, 0.0

    estimator = get_estimator(estimator, seed)
    normalizer = model.log_normalizer(estimator)
    cond_mean = model.nu_given_r_mean(r)
    if _is_diagonal(model.sigma_nu_r):
        std = np.sqrt(np.clip(np.diag(model.sigma_nu_r), 0.0, None))
        log_num = float(np.sum(model.selection.log_masses(cond_mean, std)))
        rel_num = 0.0
        if not np.isfinite(log_num):
            logger.warning("selection density underflow: P(nu in A | r) is zero, log density is -inf")
    else:
        numerator = estimator.estimate(cond_mean, model.sigma_nu_r, model.selection)
        log_num, rel_num = numerator.log_value, numerator.relative_error
    return log_basis + log_num - normalizer.log_value, float(np.hypot(rel_num, normalizer.relative_error))


def marginal_density(
    model: SelectionGaussianModel,
    i: int,
    r_i: ArrayLike,
    estimator: Optional[ProbEstimator] = None,
    seed: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Univariate marginal density of node i

    Returns:
        (density, std_error) on the natural scale, one entry per value of r_i
    """
    log_density, log_se = model.marginal_log_density(i, r_i, estimator, seed)
    with np.errstate(under="ignore"):
        density = np.exp(log_density)
    return density, density * log_se


def simulate_prior(
    model: SelectionGaussianModel,
    n_samples: int,
    sampler_config: Optional[SamplerConfig] = None,
    seed: Optional[int] = None,
) -> Realizations:
    """Realizations of the prior: nu in A from the blocked sampler, then r given nu"""
    realizations = model.simulate(n_samples, sampler_config, seed)
    logger.info(f"Simulated {realizations.n_samples} prior realizations (n={model.n})")
    return realizations

