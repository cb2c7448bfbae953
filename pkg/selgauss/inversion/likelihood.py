"""
Gauss-linear likelihood: d = H r + e, e ~ N(0, Sigma_d|r)
"""
from dataclasses import dataclass
from typing import Any, Dict, Optional, Sequence

import numpy as np

from selgauss.core.gaussian import GaussianParams, log_gaussian_pdf, sample_gaussian
from selgauss.errors import ParameterDomainError

EXACT_NOISE = 1e-10


@dataclass(frozen=True, eq=False)
class GaussLinearLikelihood:
    """Linear observation operator H with Gaussian noise covariance sigma_d_r"""
    H: np.ndarray
    sigma_d_r: np.ndarray

    def __post_init__(self):
        H = np.array(self.H, dtype=float)
        noise = np.array(self.sigma_d_r, dtype=float)
        if H.ndim != 2:
            raise ParameterDomainError(f"H must be a matrix, got shape {H.shape}")
        if noise.shape != (H.shape[0], H.shape[0]):
            raise ParameterDomainError(
                f"Noise covariance shape {noise.shape} does not match {H.shape[0]} observations"
            )
        scale = max(float(np.max(np.abs(noise))), np.finfo(float).tiny)
        if np.max(np.abs(noise - noise.T)) > 1e-12 * scale:
            raise ParameterDomainError("Noise covariance is not symmetric")
        noise = 0.5 * (noise + noise.T)
        H.setflags(write=False)
        noise.setflags(write=False)
        object.__setattr__(self, "H", H)
        object.__setattr__(self, "sigma_d_r", noise)

    @classmethod
    def exact(cls, n: int, indices: Sequence[int], eps: float = EXACT_NOISE) -> "GaussLinearLikelihood":
        """Point observations of r at `indices` with negligible noise eps I"""
        indices = np.asarray(indices, dtype=int)
        if indices.size and (indices.min() < 0 or indices.max() >= n):
            raise ParameterDomainError(f"Observation index out of range for n={n}")
        H = np.zeros((indices.size, n))
        H[np.arange(indices.size), indices] = 1.0
        return cls(H, eps * np.eye(indices.size))

    @property
    def n_data(self) -> int:
        return self.H.shape[0]

    @property
    def n_model(self) -> int:
        return self.H.shape[1]

    def observe(self, r: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        """Synthetic data H r + e"""
        noise = sample_gaussian(np.zeros(self.n_data), self.sigma_d_r, rng, 1)[0]
        return self.H @ np.asarray(r, dtype=float) + noise

    def log_likelihood(self, d: np.ndarray, r: np.ndarray) -> float:
        return log_gaussian_pdf(np.asarray(d, dtype=float), GaussianParams(self.H @ np.asarray(r, dtype=float), self.sigma_d_r))

    def permuted(self, order: Optional[Sequence[int]] = None) -> "GaussLinearLikelihood":
        """Same likelihood with observations reordered"""
        order = np.arange(self.n_data)[::-1] if order is None else np.asarray(order, dtype=int)
        return GaussLinearLikelihood(self.H[order], self.sigma_d_r[np.ix_(order, order)])

    def to_dict(self) -> Dict[str, Any]:
        return {"H": self.H.tolist(), "sigma_d_r": self.sigma_d_r.tolist()}
