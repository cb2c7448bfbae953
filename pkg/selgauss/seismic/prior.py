"""
Trivariate stationary prior for (log vp, log vs, log rho) along one vertical profile

Variables are stacked variable-major. The Gaussian basis has covariance
Sigma (x) C with a common exponential correlation C of range d_r; each
variable k carries its own coupling gamma_k and selection set
(-inf, -a_k] U [a_k, inf) on the auxiliary field.
"""
from dataclasses import dataclass
from typing import Any, Dict, Sequence

import numpy as np

from selgauss.core.gaussian import CorrelationSpec, GridSpec, build_correlation_matrix
from selgauss.errors import ParameterDomainError
from selgauss.models.selection import GAMMA_CLAMP, SelectionGaussianModel
from selgauss.models.selection_sets import IntervalUnion, SelectionSet
from selgauss.seismic.forward import N_VARIABLES

# inter-variable covariance, couplings, range and thresholds estimated in the
# well-log case; the depth trend below is synthetic
REFERENCE_SIGMA = (
    (0.0073, 0.0126, -0.0013),
    (0.0126, 0.0250, -0.0039),
    (-0.0013, -0.0039, 0.0018),
)
REFERENCE_GAMMA = (0.8656, 0.9061, 0.3331)
REFERENCE_RANGE = 1.61
REFERENCE_A = (0.111, 0.2619, 0.1151)
REFERENCE_GAUSSIAN_SIGMA = (
    (0.0059, 0.0093, -0.0007),
    (0.0093, 0.0195, -0.0025),
    (-0.0007, -0.0025, 0.0016),
)
REFERENCE_GAUSSIAN_RANGE = 1.53
SYNTHETIC_TREND = ((7.85, 0.002), (7.15, 0.0025), (0.83, 0.0004))
DEFAULT_N = 55


def linear_trend(coefficients: np.ndarray, n: int) -> np.ndarray:
    """Stacked trend values; coefficients rows are (intercept, slope per sample)"""
    t = np.arange(n, dtype=float)
    return np.concatenate([c[0] + c[1] * t for c in np.asarray(coefficients, dtype=float)])


def fit_linear_trend(r_obs: np.ndarray, n: int) -> np.ndarray:
    """Ordinary least squares (intercept, slope) per variable of a stacked profile"""
    profile = np.asarray(r_obs, dtype=float).reshape(N_VARIABLES, n)
    t = np.arange(n, dtype=float)
    return np.array([np.polyfit(t, row, 1)[::-1] for row in profile])


@dataclass(frozen=True, eq=False)
class TrivariatePriorSpec:
    """theta_p = (trend, Sigma, gamma, d_r, a) of the trivariate profile prior"""
    n: int
    trend: np.ndarray
    sigma: np.ndarray
    gamma: np.ndarray
    d_r: float
    a: np.ndarray
    correlation_family: str = "exponential"

    def __post_init__(self):
        trend = np.array(self.trend, dtype=float).reshape(N_VARIABLES, 2)
        sigma = np.array(self.sigma, dtype=float)
        gamma = np.array(self.gamma, dtype=float).reshape(N_VARIABLES)
        a = np.array(self.a, dtype=float).reshape(N_VARIABLES)
        if self.n < 1:
            raise ParameterDomainError(f"n must be positive, got {self.n}")
        if sigma.shape != (N_VARIABLES, N_VARIABLES) or not np.allclose(sigma, sigma.T, rtol=0, atol=1e-14):
            raise ParameterDomainError("sigma must be a symmetric 3 x 3 matrix")
        if np.any(np.linalg.eigvalsh(sigma) < -1e-14):
            raise ParameterDomainError("sigma is not positive semi-definite")
        if np.any(np.abs(gamma) >= 1.0):
            raise ParameterDomainError(f"|gamma_k| must be below 1, got {gamma}")
        if not self.d_r > 0:
            raise ParameterDomainError(f"d_r must be positive, got {self.d_r}")
        for name, value in (("trend", trend), ("sigma", sigma), ("gamma", gamma), ("a", a)):
            value.setflags(write=False)
            object.__setattr__(self, name, value)
        object.__setattr__(self, "d_r", float(self.d_r))

    @classmethod
    def reference(cls, n: int = DEFAULT_N, trend: Sequence[Sequence[float]] = SYNTHETIC_TREND) -> "TrivariatePriorSpec":
        """Well-log estimates with a synthetic depth trend"""
        return cls(n, np.asarray(trend), np.asarray(REFERENCE_SIGMA), np.asarray(REFERENCE_GAMMA),
                   REFERENCE_RANGE, np.asarray(REFERENCE_A))

    @property
    def dim(self) -> int:
        return N_VARIABLES * self.n

    def mean(self) -> np.ndarray:
        return linear_trend(self.trend, self.n)

    def correlation(self) -> np.ndarray:
        return build_correlation_matrix(GridSpec((self.n,)), CorrelationSpec(self.correlation_family, (self.d_r,)))

    def selection(self) -> SelectionSet:
        unions = [IntervalUnion.symmetric_two_sided(float(a_k)) for a_k in self.a]
        return SelectionSet([u for u in unions for _ in range(self.n)])

    def to_model(self) -> SelectionGaussianModel:
        """
        General form: Sigma_r = Sigma (x) C, Gamma = diag(gamma_k / sigma_k) (x) I,
        Sigma_nu|r = diag(1 - gamma_k^2) (x) I
        """
        gamma = np.clip(self.gamma, -GAMMA_CLAMP, GAMMA_CLAMP)
        std = np.sqrt(np.diag(self.sigma))
        with np.errstate(divide="ignore", invalid="ignore"):
            coupling = np.where(std > 0, gamma / std, 0.0)
        eye = np.eye(self.n)
        return SelectionGaussianModel(
            mu_r=self.mean(),
            sigma_r=np.kron(self.sigma, self.correlation()),
            mu_nu=np.zeros(self.dim),
            gamma_nu_r=np.kron(np.diag(coupling), eye),
            sigma_nu_r=np.kron(np.diag(1.0 - gamma ** 2), eye),
            selection=self.selection(),
        )

    def gaussian(self) -> "TrivariatePriorSpec":
        """The same basis with the selection switched off"""
        return TrivariatePriorSpec(self.n, self.trend, self.sigma, np.zeros(N_VARIABLES), self.d_r,
                                   np.zeros(N_VARIABLES), self.correlation_family)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "trend": self.trend.tolist(),
            "sigma": self.sigma.tolist(),
            "gamma": self.gamma.tolist(),
            "d_r": self.d_r,
            "a": self.a.tolist(),
            "correlation_family": self.correlation_family,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TrivariatePriorSpec":
        return cls(
            n=int(data["n"]),
            trend=np.asarray(data["trend"]),
            sigma=np.asarray(data["sigma"]),
            gamma=np.asarray(data["gamma"]),
            d_r=float(data["d_r"]),
            a=np.asarray(data["a"]),
            correlation_family=data.get("correlation_family", "exponential"),
        )
