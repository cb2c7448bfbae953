"""
Dense Gaussian primitives

Grids and correlation matrices, Cholesky factorization with jitter escalation,
partitioned (Schur complement) conditioning and log-densities. Everything here
is a pure function of immutable inputs.
"""
import logging
from dataclasses import dataclass
from enum import Enum
from typing import Any, Dict, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import linalg
from scipy.spatial.distance import cdist

from selgauss.errors import LinearAlgebraError, ParameterDomainError

logger = logging.getLogger(__name__)

JITTER_LEVELS = (1e-12, 1e-11, 1e-10, 1e-9, 1e-8)
SYMMETRY_RTOL = 1e-12
LOG_2PI = float(np.log(2.0 * np.pi))


def _readonly(array: np.ndarray) -> np.ndarray:
    array.setflags(write=False)
    return array


@dataclass(frozen=True)
class GridSpec:
    """Regular grid with unit spacing; node order has axis 0 fastest"""
    dims: Tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in np.atleast_1d(self.dims))
        if not 1 <= len(dims) <= 3:
            raise ParameterDomainError(f"Grid must have 1 to 3 axes, got {len(dims)}")
        if any(d < 1 for d in dims):
            raise ParameterDomainError(f"Grid dimensions must be positive: {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def ndim(self) -> int:
        return len(self.dims)

    @property
    def n_nodes(self) -> int:
        return int(np.prod(self.dims))

    def coordinates(self) -> np.ndarray:
        """Node coordinates, shape (n_nodes, ndim)"""
        axes = np.indices(self.dims)
        return np.stack([a.ravel(order="F") for a in axes], axis=1).astype(float)

    def node_index(self, position: Sequence[int]) -> int:
        """Flat node index of a grid position"""
        return int(np.ravel_multi_index(tuple(int(p) for p in position), self.dims, order="F"))

    def position(self, index: int) -> Tuple[int, ...]:
        return tuple(int(p) for p in np.unravel_index(int(index), self.dims, order="F"))

    def to_dict(self) -> Dict[str, Any]:
        return {"dims": list(self.dims)}


class CorrelationFamily(str, Enum):
    SECOND_ORDER_EXPONENTIAL = "second_order_exponential"
    EXPONENTIAL = "exponential"


@dataclass(frozen=True)
class CorrelationSpec:
    """
    Stationary correlation function

    A single range is shared by all axes; otherwise one range per axis.
    """
    family: CorrelationFamily
    ranges: Tuple[float, ...]

    def __post_init__(self):
        try:
            family = CorrelationFamily(self.family)
        except ValueError as exc:
            raise ParameterDomainError(f"Unknown correlation family: {self.family}") from exc
        ranges = tuple(float(r) for r in np.atleast_1d(self.ranges))
        if not ranges:
            raise ParameterDomainError("At least one correlation range is required")
        if any(not np.isfinite(r) or r <= 0 for r in ranges):
            raise ParameterDomainError(f"Correlation ranges must be positive: {ranges}")
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "ranges", ranges)

    def ranges_for(self, ndim: int) -> np.ndarray:
        if len(self.ranges) == 1:
            return np.full(ndim, self.ranges[0])
        if len(self.ranges) != ndim:
            raise ParameterDomainError(
                f"{len(self.ranges)} ranges given for a {ndim}-axis grid"
            )
        return np.asarray(self.ranges)

    def correlation(self, lags: np.ndarray) -> np.ndarray:
        """rho(tau) for lag vectors of shape (..., ndim)"""
        lags = np.atleast_1d(np.asarray(lags, dtype=float))
        scaled = lags / self.ranges_for(lags.shape[-1])
        squared = np.sum(scaled ** 2, axis=-1)
        if self.family is CorrelationFamily.SECOND_ORDER_EXPONENTIAL:
            return np.exp(-squared)
        return np.exp(-np.sqrt(squared))

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family.value, "ranges": list(self.ranges)}


def build_correlation_matrix(grid: GridSpec, spec: CorrelationSpec) -> np.ndarray:
    """
    Correlation matrix of all grid nodes

    Args:
        grid: Grid definition
        spec: Correlation family and ranges (node units)

    Returns:
        Symmetric (n_nodes x n_nodes) matrix with unit diagonal
    """
    coords = grid.coordinates() / spec.ranges_for(grid.ndim)
    if spec.family is CorrelationFamily.SECOND_ORDER_EXPONENTIAL:
        corr = np.exp(-cdist(coords, coords, "sqeuclidean"))
    else:
        corr = np.exp(-cdist(coords, coords, "euclidean"))
    np.fill_diagonal(corr, 1.0)
    return corr


def cholesky_factor(cov: np.ndarray, label: str = "covariance") -> np.ndarray:
    """
    Lower Cholesky factor with jitter escalation

    Tries the raw matrix first, then adds eps*I for eps in 1e-12 .. 1e-8.

    Raises:
        LinearAlgebraError: if every attempt fails
    """
    cov = np.asarray(cov, dtype=float)
    if cov.ndim != 2 or cov.shape[0] != cov.shape[1]:
        raise ParameterDomainError(f"{label} must be square, got shape {cov.shape}")
    n = cov.shape[0]
    if n == 0:
        return np.zeros((0, 0))
    if not np.all(np.isfinite(cov)):
        raise LinearAlgebraError(f"{label} contains non-finite entries")

    try:
        return linalg.cholesky(cov, lower=True, check_finite=False)
    except linalg.LinAlgError:
        pass

    eye = np.eye(n)
    for eps in JITTER_LEVELS:
        try:
            factor = linalg.cholesky(cov + eps * eye, lower=True, check_finite=False)
        except linalg.LinAlgError:
            continue
        logger.warning(f"{label}: factorized with jitter {eps:.0e} (n={n})")
        return factor

    raise LinearAlgebraError(
        f"{label} is not positive semi-definite (factorization failed with jitter up to "
        f"{JITTER_LEVELS[-1]:.0e})"
    )


@dataclass(frozen=True, eq=False)
class GaussianParams:
    """Mean vector and covariance matrix of a Gaussian vector"""
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.array(self.mean, dtype=float).reshape(-1)
        cov = np.array(self.cov, dtype=float)
        if mean.size == 0:
            cov = cov.reshape(0, 0)
        if cov.shape != (mean.size, mean.size):
            raise ParameterDomainError(
                f"Covariance shape {cov.shape} does not match mean length {mean.size}"
            )
        if mean.size:
            asym = np.max(np.abs(cov - cov.T))
            scale = max(np.max(np.abs(cov)), np.finfo(float).tiny)
            if asym > SYMMETRY_RTOL * scale:
                raise ParameterDomainError(
                    f"Covariance is not symmetric (max asymmetry {asym:.3e})"
                )
            cov = 0.5 * (cov + cov.T)
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "cov", _readonly(cov))

    @property
    def dim(self) -> int:
        return self.mean.size

    @property
    def std(self) -> np.ndarray:
        return np.sqrt(np.clip(np.diag(self.cov), 0.0, None))

    def marginal(self, indices: Sequence[int]) -> "GaussianParams":
        idx = np.asarray(indices, dtype=int)
        return GaussianParams(self.mean[idx], self.cov[np.ix_(idx, idx)])

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        return sample_gaussian(self.mean, self.cov, rng, size)

    def to_dict(self) -> Dict[str, Any]:
        return {"mean": self.mean.tolist(), "cov": self.cov.tolist()}


def conditional_gain(
    cov: np.ndarray,
    target_idx: Sequence[int],
    given_idx: Sequence[int],
) -> Tuple[np.ndarray, np.ndarray]:
    """
    Regression gain and Schur complement of a partitioned covariance

    Returns:
        (gain, cond_cov) with gain = S_tg S_gg^-1 and
        cond_cov = S_tt - S_tg S_gg^-1 S_gt
    """
    t = np.asarray(target_idx, dtype=int)
    g = np.asarray(given_idx, dtype=int)
    s_tt = cov[np.ix_(t, t)]
    if g.size == 0:
        return np.zeros((t.size, 0)), s_tt.copy()
    s_tg = cov[np.ix_(t, g)]
    factor = cholesky_factor(cov[np.ix_(g, g)], label="observed-block covariance")
    half = linalg.solve_triangular(factor, s_tg.T, lower=True, check_finite=False)
    gain = linalg.solve_triangular(factor.T, half, lower=False, check_finite=False).T
    cond = s_tt - half.T @ half
    return gain, 0.5 * (cond + cond.T)


def condition_gaussian(
    joint: GaussianParams,
    observed_idx: Sequence[int],
    observed_vals: Sequence[float],
) -> GaussianParams:
    """
    Conditional distribution of the unobserved components

    Args:
        joint: Joint Gaussian
        observed_idx: Distinct indices of observed components
        observed_vals: Observed values, same order as observed_idx

    Returns:
        Gaussian over the remaining components in ascending index order
    """
    idx = np.asarray(observed_idx, dtype=int).reshape(-1)
    vals = np.asarray(observed_vals, dtype=float).reshape(-1)
    if idx.size != vals.size:
        raise ParameterDomainError(
            f"{idx.size} observed indices but {vals.size} observed values"
        )
    if idx.size == 0:
        return joint
    if np.unique(idx).size != idx.size:
        raise ParameterDomainError("Observed indices must be distinct")
    if idx.min() < 0 or idx.max() >= joint.dim:
        raise ParameterDomainError(f"Observed index out of range for dimension {joint.dim}")

    rest = np.setdiff1d(np.arange(joint.dim), idx)
    gain, cond_cov = conditional_gain(joint.cov, rest, idx)
    cond_mean = joint.mean[rest] + gain @ (vals - joint.mean[idx])
    return GaussianParams(cond_mean, cond_cov)


def log_gaussian_pdf(x: np.ndarray, params: GaussianParams) -> Union[float, np.ndarray]:
    """
    log phi_n(x; mu, Sigma) through the Cholesky factor

    Accepts a single point (n,) or a stack of points (m, n).
    """
    x = np.asarray(x, dtype=float)
    n = params.dim
    if x.shape[-1:] != (n,) and not (n == 0 and x.size == 0):
        raise ParameterDomainError(f"Point of shape {x.shape} does not match dimension {n}")
    if n == 0:
        return 0.0 if x.ndim <= 1 else np.zeros(x.shape[0])

    factor = cholesky_factor(params.cov)
    resid = np.atleast_2d(x - params.mean)
    z = linalg.solve_triangular(factor, resid.T, lower=True, check_finite=False)
    log_det_half = np.sum(np.log(np.diag(factor)))
    values = -0.5 * (n * LOG_2PI + np.sum(z * z, axis=0)) - log_det_half
    return float(values[0]) if x.ndim == 1 else values


def sample_gaussian(
    mean: np.ndarray,
    cov: np.ndarray,
    rng: np.random.Generator,
    size: int,
    factor: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Draw `size` realizations (rows) of N(mean, cov)"""
    mean = np.asarray(mean, dtype=float)
    if factor is None:
        factor = cholesky_factor(cov)
    z = rng.standard_normal((int(size), mean.size))
    return mean + z @ factor.T


def resolve_seed(seed: Optional[int]) -> int:
    """Concrete integer seed; a fresh one is drawn from OS entropy when None"""
    if seed is None:
        return int(np.random.SeedSequence().entropy % (2 ** 63))
    return int(seed)


def derive_seed(seed: int, *keys: int) -> int:
    """Independent child seed of (seed, keys), stable across runs and platforms"""
    state = np.random.SeedSequence([int(seed), *(int(k) for k in keys)]).generate_state(1, dtype=np.uint64)
    return int(state[0]) >> 1
