"""
Convolved, contrast-linearized seismic forward model d = W A D r + e

r stacks (log vp, log vs, log rho) variable-major over n_t samples; d stacks
angle gathers angle-major. D differences each log, A applies the linearized
(Aki-Richards) angle weights, W convolves each angle trace with its wavelet.
"""
import logging
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence, Tuple

import numpy as np
from scipy import linalg
from scipy.optimize import minimize

from selgauss.core.gaussian import cholesky_factor
from selgauss.errors import NumericalError, ParameterDomainError

logger = logging.getLogger(__name__)

N_VARIABLES = 3
VARIABLE_NAMES = ("log_vp", "log_vs", "log_rho")

# synthetic defaults; no published wavelet or angle-stack numerics are reproduced
DEFAULT_ANGLES = (12.0, 22.0, 31.0)
DEFAULT_PEAK_FREQUENCIES = (30.0, 27.0, 24.0)
DEFAULT_SAMPLE_INTERVAL = 0.004
DEFAULT_WAVELET_LENGTH = 31
DEFAULT_VS_VP_RATIO = 0.5


def avo_weights(angle_deg: float, vs_vp_ratio: float = DEFAULT_VS_VP_RATIO) -> np.ndarray:
    """
    Weak-contrast reflectivity weights of (dlog vp, dlog vs, dlog rho)

    Returns:
        [0.5 (1 + tan^2), -4 k^2 sin^2, 0.5 (1 - 4 k^2 sin^2)] with k = vs / vp
    """
    theta = np.deg2rad(angle_deg)
    k2 = vs_vp_ratio ** 2
    sin2 = np.sin(theta) ** 2
    return np.array([
        0.5 * (1.0 + np.tan(theta) ** 2),
        -4.0 * k2 * sin2,
        0.5 * (1.0 - 4.0 * k2 * sin2),
    ])


def ricker(peak_frequency: float, dt: float = DEFAULT_SAMPLE_INTERVAL, length: int = DEFAULT_WAVELET_LENGTH) -> np.ndarray:
    """Zero-phase Ricker kernel with odd length, peak at the center sample"""
    if length % 2 == 0:
        length += 1
    t = (np.arange(length) - length // 2) * dt
    arg = (np.pi * peak_frequency * t) ** 2
    return (1.0 - 2.0 * arg) * np.exp(-arg)


def differencing_matrix(n_t: int, n_vars: int = N_VARIABLES) -> np.ndarray:
    """Per-variable first difference: row t is r[t+1] - r[t]; the last row is zero"""
    block = np.zeros((n_t, n_t))
    idx = np.arange(n_t - 1)
    block[idx, idx] = -1.0
    block[idx, idx + 1] = 1.0
    return np.kron(np.eye(n_vars), block)


def convolution_matrix(kernel: np.ndarray, n_t: int) -> np.ndarray:
    """Same-size Toeplitz convolution centered on the kernel midpoint"""
    kernel = np.asarray(kernel, dtype=float)
    half = kernel.size // 2
    column = np.zeros(n_t)
    row = np.zeros(n_t)
    column[: min(n_t, kernel.size - half)] = kernel[half: half + n_t]
    row[: min(n_t, half + 1)] = kernel[half::-1][:n_t]
    return linalg.toeplitz(column, row)


@dataclass(frozen=True, eq=False)
class SeismicForwardSpec:
    """Angles, per-angle wavelets and trace length of the forward model"""
    angles: Tuple[float, ...]
    wavelets: Tuple[np.ndarray, ...]
    n_t: int
    vs_vp_ratio: float = DEFAULT_VS_VP_RATIO

    def __post_init__(self):
        if self.n_t < 2:
            raise ParameterDomainError(f"n_t must be at least 2, got {self.n_t}")
        angles = tuple(float(a) for a in self.angles)
        wavelets = tuple(np.asarray(w, dtype=float) for w in self.wavelets)
        if not angles:
            raise ParameterDomainError("At least one reflection angle is required")
        if len(wavelets) != len(angles):
            raise ParameterDomainError(f"{len(wavelets)} wavelets for {len(angles)} angles")
        for w in wavelets:
            if w.ndim != 1 or w.size == 0 or not np.all(np.isfinite(w)):
                raise ParameterDomainError("Wavelets must be finite, non-empty vectors")
            if w.size >= self.n_t:
                raise ParameterDomainError(f"Wavelet of length {w.size} is not shorter than n_t={self.n_t}")
        if not self.vs_vp_ratio > 0:
            raise ParameterDomainError("vs_vp_ratio must be positive")
        object.__setattr__(self, "angles", angles)
        object.__setattr__(self, "wavelets", wavelets)

    @classmethod
    def with_ricker(
        cls,
        n_t: int,
        angles: Sequence[float] = DEFAULT_ANGLES,
        peak_frequencies: Sequence[float] = DEFAULT_PEAK_FREQUENCIES,
        dt: float = DEFAULT_SAMPLE_INTERVAL,
        length: int = DEFAULT_WAVELET_LENGTH,
        vs_vp_ratio: float = DEFAULT_VS_VP_RATIO,
    ) -> "SeismicForwardSpec":
        if len(peak_frequencies) != len(angles):
            raise ParameterDomainError("One peak frequency per angle is required")
        length = min(length, n_t - 1)
        if length % 2 == 0:
            length -= 1
        wavelets = tuple(ricker(f, dt, length) for f in peak_frequencies)
        return cls(tuple(angles), wavelets, n_t, vs_vp_ratio)

    @property
    def n_angles(self) -> int:
        return len(self.angles)

    @property
    def n_data(self) -> int:
        return self.n_angles * self.n_t

    @property
    def n_model(self) -> int:
        return N_VARIABLES * self.n_t

    def to_dict(self) -> Dict[str, Any]:
        return {
            "angles": list(self.angles),
            "wavelets": [w.tolist() for w in self.wavelets],
            "n_t": self.n_t,
            "vs_vp_ratio": self.vs_vp_ratio,
        }


def build_seismic_operator(spec: SeismicForwardSpec) -> np.ndarray:
    """
    Dense H = W A D of shape (n_angles n_t, 3 n_t)
    """
    n_t = spec.n_t
    D = differencing_matrix(n_t)
    A = np.vstack([
        np.kron(avo_weights(angle, spec.vs_vp_ratio)[None, :], np.eye(n_t))
        for angle in spec.angles
    ])
    W = linalg.block_diag(*[convolution_matrix(w, n_t) for w in spec.wavelets])
    H = W @ A @ D
    if H.shape != (spec.n_data, spec.n_model):
        raise ParameterDomainError(f"Operator shape {H.shape} != ({spec.n_data}, {spec.n_model})")
    return H


@dataclass(frozen=True)
class LikelihoodNoiseSpec:
    """theta_l = (sigma2_d_r, d_a, d_t): variance and exponential ranges in angle and time"""
    sigma2_d_r: float
    d_a: float
    d_t: float

    def __post_init__(self):
        for name in ("sigma2_d_r", "d_a", "d_t"):
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise ParameterDomainError(f"{name} must be positive, got {value}")

    def correlation(self, angles: Sequence[float], n_t: int, block_diagonal: bool = False) -> np.ndarray:
        """Angle-major correlation; block_diagonal leaves the traces uncorrelated with each other"""
        angles = np.asarray(angles, dtype=float)
        if block_diagonal:
            c_angle = np.eye(angles.size)
        else:
            c_angle = np.exp(-np.abs(angles[:, None] - angles[None, :]) / self.d_a)
        t = np.arange(n_t, dtype=float)
        c_time = np.exp(-np.abs(t[:, None] - t[None, :]) / self.d_t)
        return np.kron(c_angle, c_time)

    def covariance(self, angles: Sequence[float], n_t: int, block_diagonal: bool = False) -> np.ndarray:
        """sigma2 exp(-|angle_i - angle_j| / d_a) exp(-|t - s| / d_t), angle-major"""
        return self.sigma2_d_r * self.correlation(angles, n_t, block_diagonal)

    def to_dict(self) -> Dict[str, float]:
        return {"sigma2_d_r": self.sigma2_d_r, "d_a": self.d_a, "d_t": self.d_t}


# estimates reported for the well-log case; their scale belongs to that data set
REFERENCE_NOISE = LikelihoodNoiseSpec(sigma2_d_r=0.402, d_a=7.3, d_t=11.1)


def _noise_profile(resid: np.ndarray, corr: np.ndarray) -> Tuple[float, float]:
    """(sigma2_hat, profile log-likelihood) of centred Gaussian residuals"""
    m = resid.size
    factor = cholesky_factor(corr, label="noise correlation")
    white = linalg.solve_triangular(factor, resid, lower=True, check_finite=False)
    sigma2 = float(white @ white) / m
    log_det = 2.0 * float(np.sum(np.log(np.diag(factor))))
    return sigma2, -0.5 * (m * (np.log(2.0 * np.pi * sigma2) + 1.0) + log_det)


def fit_noise_parameters(
    H: np.ndarray,
    d: np.ndarray,
    r_obs: np.ndarray,
    angles: Sequence[float],
    n_t: int,
    bounds: Optional[Dict[str, Tuple[float, float]]] = None,
    tol: float = 1e-6,
    block_diagonal: bool = False,
) -> LikelihoodNoiseSpec:
    """
    Maximum likelihood theta_l from data d and an exactly observed r

    sigma2 is profiled in closed form; (d_a, d_t) are found by bounded
    simplex search on the log scale.
    """
    bounds = bounds or {"d_a": (0.5, 50.0), "d_t": (0.1, 50.0)}
    resid = np.asarray(d, dtype=float) - np.asarray(H, dtype=float) @ np.asarray(r_obs, dtype=float)
    log_bounds = [tuple(np.log(bounds[name])) for name in ("d_a", "d_t")]

    def negative_profile(x: np.ndarray) -> float:
        spec = LikelihoodNoiseSpec(1.0, float(np.exp(x[0])), float(np.exp(x[1])))
        try:
            return -_noise_profile(resid, spec.correlation(angles, n_t, block_diagonal))[1]
        except NumericalError:
            return 1e300

    x0 = np.array([np.mean(b) for b in log_bounds])
    result = minimize(negative_profile, x0, method="Nelder-Mead", bounds=log_bounds,
                      options={"xatol": tol, "fatol": tol, "maxiter": 1000})
    d_a, d_t = (float(v) for v in np.exp(result.x))
    sigma2, _ = _noise_profile(resid, LikelihoodNoiseSpec(1.0, d_a, d_t).correlation(angles, n_t, block_diagonal))
    noise = LikelihoodNoiseSpec(max(sigma2, 1e-12), d_a, d_t)
    logger.info(f"Noise fit: sigma2={noise.sigma2_d_r:.4g}, d_a={d_a:.3g}, d_t={d_t:.3g}")
    return noise
