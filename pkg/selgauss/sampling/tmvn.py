"""
Blocked Metropolis-Hastings sampler for truncated Gaussian vectors

Each iteration picks a center element, takes the block of elements most
correlated with it, and proposes the block sequentially from the truncated
univariate conditionals given everything outside the block. The proposal is
independent of the current block values, and the acceptance ratio is the ratio
of the products of conditional set masses along the proposed and current paths.
"""
import logging
from collections import OrderedDict
from dataclasses import dataclass, field
from typing import Any, Dict, Optional, Tuple

import numpy as np
from scipy import linalg

from selgauss.config import SamplerConfig
from selgauss.core.gaussian import cholesky_factor, conditional_gain, resolve_seed
from selgauss.errors import ChainDiagnosticsError, ParameterDomainError, SamplerInitializationError
from selgauss.models.selection_sets import SelectionSet
from selgauss.sampling.truncnorm import sample_union_scalar

logger = logging.getLogger(__name__)


@dataclass
class Chain:
    """Post burn-in, thinned states of one sampler run"""
    samples: np.ndarray
    acceptance_rate: float
    seed: int
    n_accepted: int = 0
    n_proposals: int = 0
    config: SamplerConfig = field(default_factory=SamplerConfig)
    n_underflow: int = 0

    @property
    def n_samples(self) -> int:
        return self.samples.shape[0]

    def to_dict(self) -> Dict[str, Any]:
        """Metadata (everything except the samples)"""
        return {
            "seed": self.seed,
            "acceptance_rate": self.acceptance_rate,
            "n_accepted": self.n_accepted,
            "n_proposals": self.n_proposals,
            "n_underflow": self.n_underflow,
            "n_samples": self.n_samples,
            "config": self.config.model_dump(),
        }


@dataclass(frozen=True)
class _BlockTable:
    indices: np.ndarray
    factor: np.ndarray  # lower Cholesky factor of the block conditional covariance


def _propose_sequential(
    cond_mean: np.ndarray,
    factor: np.ndarray,
    A: SelectionSet,
    block: np.ndarray,
    uniforms: np.ndarray,
) -> Tuple[np.ndarray, float, int]:
    """
    Draw the block component by component from its truncated conditionals

    Returns:
        (proposal, log_weight, n_underflow)
    """
    size = block.size
    proposal = np.empty(size)
    z = np.empty(size)
    log_weight = 0.0
    n_underflow = 0
    for k in range(size):
        union = A.components[block[k]]
        scale = factor[k, k]
        mean_k = cond_mean[k] + float(factor[k, :k] @ z[:k])
        draw, log_mass, underflow = sample_union_scalar(
            union.lows, union.highs, mean_k, scale, uniforms[0, k], uniforms[1, k]
        )
        proposal[k] = draw
        z[k] = (draw - mean_k) / scale
        log_weight += log_mass
        n_underflow += int(underflow)
    return proposal, log_weight, n_underflow


def _path_log_weight(
    values: np.ndarray,
    cond_mean: np.ndarray,
    factor: np.ndarray,
    A: SelectionSet,
    block: np.ndarray,
) -> float:
    """Sum of conditional log set masses along the path that produced `values`"""
    z = linalg.solve_triangular(factor, values - cond_mean, lower=True, check_finite=False)
    diag = np.diag(factor)
    path_means = values - diag * z
    return float(np.sum(A.log_masses(path_means, diag, indices=block)))


def sequential_block_proposal(
    mu: np.ndarray,
    sigma: np.ndarray,
    A: SelectionSet,
    block_idx: np.ndarray,
    complement_vals: np.ndarray,
    seed: Optional[int] = None,
) -> Tuple[np.ndarray, float]:
    """
    One sequential truncated proposal for a block given the rest of the vector

    Args:
        mu: Mean of the full vector
        sigma: Covariance of the full vector
        A: Selection set over the full vector
        block_idx: Distinct indices of the block
        complement_vals: Values of the remaining elements, ascending index order
        seed: Seed of the uniform draws

    Returns:
        (proposal, log_weight) with log_weight the summed conditional log masses
    """
    mu = np.asarray(mu, dtype=float)
    block = np.asarray(block_idx, dtype=int)
    if np.unique(block).size != block.size:
        raise ParameterDomainError("Block indices must be distinct")
    rest = np.setdiff1d(np.arange(mu.size), block)
    complement_vals = np.asarray(complement_vals, dtype=float).reshape(-1)
    if complement_vals.size != rest.size:
        raise ParameterDomainError(
            f"Expected {rest.size} complement values, got {complement_vals.size}"
        )

    gain, cond_cov = conditional_gain(np.asarray(sigma, dtype=float), block, rest)
    cond_mean = mu[block] + gain @ (complement_vals - mu[rest])
    factor = cholesky_factor(cond_cov, label="block conditional covariance")
    rng = np.random.default_rng(resolve_seed(seed))
    proposal, log_weight, n_underflow = _propose_sequential(
        cond_mean, factor, A, block, rng.random((2, block.size))
    )
    if n_underflow:
        logger.warning(f"{n_underflow} block components underflowed; nearest interval points used")
    return proposal, log_weight


class TruncatedGaussianSampler:
    """
    Sampler for N(mu, Sigma) restricted to a product selection set

    Block tables (membership and conditional Cholesky factor) are built lazily
    per center and kept in a bounded LRU cache.
    """

    def __init__(
        self,
        mu: np.ndarray,
        sigma: np.ndarray,
        A: SelectionSet,
        config: Optional[SamplerConfig] = None,
    ):
        self.mu = np.asarray(mu, dtype=float).reshape(-1)
        self.sigma = np.asarray(sigma, dtype=float)
        self.A = A
        self.config = config or SamplerConfig()
        self.dim = self.mu.size
        if self.sigma.shape != (self.dim, self.dim):
            raise ParameterDomainError(
                f"Covariance shape {self.sigma.shape} does not match mean length {self.dim}"
            )
        if A.q != self.dim:
            raise ParameterDomainError(f"Selection set has {A.q} components, expected {self.dim}")

        factor = cholesky_factor(self.sigma, label="truncated Gaussian covariance")
        self.precision = linalg.cho_solve((factor, True), np.eye(self.dim), check_finite=False)
        self.std = np.sqrt(np.diag(self.sigma))
        self.block_size = min(self.config.block_size, self.dim)
        self._blocks: "OrderedDict[int, _BlockTable]" = OrderedDict()

        n_eligible = min(self.config.n_eligible or self.dim, self.dim)
        self.eligible = np.unique(np.round(np.linspace(0, self.dim - 1, n_eligible)).astype(int))

    def block_indices(self, center: int) -> np.ndarray:
        """The center followed by the elements most correlated with it (ties by index)"""
        with np.errstate(divide="ignore", invalid="ignore"):
            corr = np.abs(self.sigma[center] / (self.std[center] * self.std))
        corr = np.nan_to_num(corr, nan=0.0)
        order = np.lexsort((np.arange(self.dim), -corr))
        order = order[order != center]
        return np.concatenate(([center], order[: self.block_size - 1])).astype(int)

    def block_table(self, center: int) -> _BlockTable:
        table = self._blocks.get(center)
        if table is not None:
            self._blocks.move_to_end(center)
            return table
        indices = self.block_indices(center)
        q_aa = self.precision[np.ix_(indices, indices)]
        q_factor = cholesky_factor(q_aa, label="block precision")
        cond_cov = linalg.cho_solve((q_factor, True), np.eye(indices.size), check_finite=False)
        table = _BlockTable(indices, cholesky_factor(0.5 * (cond_cov + cond_cov.T), label="block conditional covariance"))
        self._blocks[center] = table
        if len(self._blocks) > self.config.max_cached_blocks:
            self._blocks.popitem(last=False)
        return table

    def conditional_mean(self, table: _BlockTable, x: np.ndarray) -> np.ndarray:
        """E[x_a | x_b] = x_a - S Q_a. (x - mu) with S the block conditional covariance"""
        resid = self.precision[table.indices] @ (x - self.mu)
        return x[table.indices] - table.factor @ (table.factor.T @ resid)

    def initial_state(self, rng: np.random.Generator) -> np.ndarray:
        """Independent marginal draws projected onto the selection set"""
        for attempt in range(self.config.max_init_tries):
            x = self.A.project(self.mu + self.std * rng.standard_normal(self.dim))
            if np.all(np.isfinite(x)) and self.A.contains(x):
                if attempt:
                    logger.debug(f"Initial state found after {attempt + 1} tries")
                return x
        raise SamplerInitializationError(
            f"No initial state inside the selection set after {self.config.max_init_tries} tries"
        )

    def _centers(self, rng: np.random.Generator):
        if self.config.element_selection == "uniform":
            while True:
                yield int(self.eligible[rng.integers(self.eligible.size)])
        while True:
            for center in rng.permutation(self.eligible):
                yield int(center)

    def run(self, n_samples: int, seed: Optional[int] = None) -> Chain:
        """
        Run the chain

        Args:
            n_samples: Number of stored states
            seed: Seed of the single generator driving the run

        Returns:
            Chain with n_samples thinned post burn-in states
        """
        if n_samples < 1:
            raise ParameterDomainError(f"n_samples must be positive, got {n_samples}")
        seed = resolve_seed(seed)
        rng = np.random.default_rng(seed)
        n_burnin = self.config.burnin_for(self.dim)
        n_thin = self.config.n_thin
        n_iter = n_burnin + n_samples * n_thin

        x = self.initial_state(rng)
        samples = np.empty((n_samples, self.dim))
        centers = self._centers(rng)
        n_accepted = 0
        n_underflow = 0
        stored = 0

        for it in range(n_iter):
            table = self.block_table(next(centers))
            block = table.indices
            cond_mean = self.conditional_mean(table, x)
            proposal, log_w_new, underflows = _propose_sequential(
                cond_mean, table.factor, self.A, block, rng.random((2, block.size))
            )
            n_underflow += underflows
            log_w_old = _path_log_weight(x[block], cond_mean, table.factor, self.A, block)
            log_u = np.log(rng.random())

            if log_w_new > -np.inf and (log_w_old == -np.inf or log_u < log_w_new - log_w_old):
                x[block] = proposal
                n_accepted += 1

            if it >= n_burnin and (it - n_burnin + 1) % n_thin == 0:
                samples[stored] = x
                stored += 1

        if not self.A.is_full and n_accepted == 0:
            raise ChainDiagnosticsError(f"No proposal accepted in {n_iter} iterations")
        if not np.all(self.A.contains(samples)):
            raise ChainDiagnosticsError("Chain produced states outside the selection set")
        if n_underflow:
            logger.warning(f"{n_underflow} truncated proposals underflowed; nearest interval points used")

        rate = n_accepted / n_iter
        logger.info(
            f"Chain finished: dim={self.dim}, block={self.block_size}, "
            f"iterations={n_iter}, acceptance={rate:.3f}"
        )
        return Chain(
            samples=samples,
            acceptance_rate=rate,
            seed=seed,
            n_accepted=n_accepted,
            n_proposals=n_iter,
            config=self.config,
            n_underflow=n_underflow,
        )


def sample_tmvn(
    mu: np.ndarray,
    sigma: np.ndarray,
    A: SelectionSet,
    n_samples: int,
    config: Optional[SamplerConfig] = None,
    seed: Optional[int] = None,
) -> Chain:
    """Draw a chain from N(mu, sigma) restricted to A"""
    return TruncatedGaussianSampler(mu, sigma, A, config).run(n_samples, seed)
