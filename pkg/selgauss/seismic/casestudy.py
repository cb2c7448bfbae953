"""
Synthetic seismic profile study

One replicate: simulate a trivariate selection Gaussian truth, synthesize
angle-stack data, fit a selection and a Gaussian prior to the true profile
with the trend fixed at its least squares line, invert the data under both
priors and score E predictions and 80% intervals per variable, prior and
posterior.
"""
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from selgauss.config import CaseStudyConfig
from selgauss.core.gaussian import derive_seed
from selgauss.inference.trivariate import TrivariateFit, fit_trivariate_gaussian, fit_trivariate_selection
from selgauss.inversion.likelihood import EXACT_NOISE, GaussLinearLikelihood
from selgauss.inversion.posterior import posterior_model
from selgauss.inversion.prediction import Predictions, predict_all, prior_predictions
from selgauss.io.tables import read_wavelet
from selgauss.seismic.forward import (
    N_VARIABLES,
    VARIABLE_NAMES,
    LikelihoodNoiseSpec,
    SeismicForwardSpec,
    build_seismic_operator,
    fit_noise_parameters,
)
from selgauss.seismic.prior import TrivariatePriorSpec, fit_linear_trend

logger = logging.getLogger(__name__)

PRIOR_TYPES = ("selection", "gaussian")

# sub-seed keys of one replicate
_TRUTH, _NOISE, _POSTERIOR, _PRIOR = range(4)


@dataclass
class ReplicateResult:
    """Scores and artifacts of one synthetic replicate"""
    replicate: int
    seed: int
    truth: np.ndarray
    data: np.ndarray
    noise: LikelihoodNoiseSpec
    fits: Dict[str, TrivariateFit]
    posterior: Dict[str, Predictions]
    prior: Dict[str, Predictions]
    rows: List[Dict[str, Any]] = field(default_factory=list)

    def mse(self, prior_type: str, variable: str) -> float:
        for row in self.rows:
            if row["model"] == prior_type and row["variable"] == variable:
                return row["mse"]
        raise KeyError((prior_type, variable))


@dataclass
class CaseStudyReport:
    """Per-replicate rows in table layout and the cross-replicate summary"""
    replicates: List[ReplicateResult]
    bimodal_variables: List[str]

    def table_rows(self) -> List[Dict[str, Any]]:
        return [dict(row, replicate=result.replicate) for result in self.replicates for row in result.rows]

    def summary_rows(self) -> List[Dict[str, Any]]:
        """Replicate means of MSE and coverages per model and variable"""
        rows = []
        for prior_type in PRIOR_TYPES:
            for variable in VARIABLE_NAMES:
                picked = [row for row in self.table_rows() if row["model"] == prior_type and row["variable"] == variable]
                rows.append({
                    "model": prior_type,
                    "variable": variable,
                    "mse": float(np.mean([row["mse"] for row in picked])),
                    "posterior_coverage": float(np.mean([row["posterior_coverage"] for row in picked])),
                    "prior_coverage": float(np.mean([row["prior_coverage"] for row in picked])),
                })
        return rows

    def improvement_fraction(self) -> Dict[str, float]:
        """Share of replicates where the selection prior has the smaller MSE"""
        return {
            variable: float(np.mean([
                result.mse("selection", variable) < result.mse("gaussian", variable) for result in self.replicates
            ]))
            for variable in self.bimodal_variables
        }

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n_replicates": len(self.replicates),
            "summary": self.summary_rows(),
            "improvement_fraction": self.improvement_fraction(),
            "replicates": [
                {
                    "replicate": result.replicate,
                    "seed": result.seed,
                    "noise": result.noise.to_dict(),
                    "fits": {name: fit.to_dict() for name, fit in result.fits.items()},
                    "rows": result.rows,
                }
                for result in self.replicates
            ],
        }


def build_forward_spec(config: CaseStudyConfig) -> SeismicForwardSpec:
    if config.wavelet_files:
        wavelets = tuple(read_wavelet(path) for path in config.wavelet_files)
        return SeismicForwardSpec(tuple(config.angles), wavelets, config.n, config.vs_vp_ratio)
    return SeismicForwardSpec.with_ricker(
        config.n,
        config.angles,
        config.peak_frequencies,
        config.sample_interval,
        config.wavelet_length,
        config.vs_vp_ratio,
    )


def build_truth(config: CaseStudyConfig) -> TrivariatePriorSpec:
    if config.truth is None:
        return TrivariatePriorSpec.reference(config.n)
    return TrivariatePriorSpec(
        config.n,
        np.asarray(config.truth.trend),
        np.asarray(config.truth.sigma),
        np.asarray(config.truth.gamma),
        config.truth.d_r,
        np.asarray(config.truth.a),
    )


def build_operator(config: CaseStudyConfig) -> np.ndarray:
    """H = W A D, or the identity on the stacked profile"""
    if config.forward == "identity":
        return np.eye(N_VARIABLES * config.n)
    return build_seismic_operator(build_forward_spec(config))


def noise_layout(config: CaseStudyConfig) -> Tuple[List[float], bool]:
    """(trace angles, block_diagonal); identity data hold one uncorrelated trace per variable"""
    if config.forward == "identity":
        return [0.0] * N_VARIABLES, True
    return list(config.angles), False


def noise_spec(config: CaseStudyConfig, signal: np.ndarray) -> LikelihoodNoiseSpec:
    """Noise variance from noise_variance, else var(H r) / signal_to_noise"""
    if config.noise_variance is not None:
        variance = config.noise_variance
    else:
        variance = float(np.var(signal)) / config.signal_to_noise
    d_a, d_t = config.noise_ranges
    return LikelihoodNoiseSpec(max(variance, EXACT_NOISE), d_a, d_t)


def _score(truth: np.ndarray, posterior: Predictions, prior: Predictions, n: int, prior_type: str) -> List[Dict[str, Any]]:
    rows = []
    for k, variable in enumerate(VARIABLE_NAMES):
        part = slice(k * n, (k + 1) * n)
        t = truth[part]
        rows.append({
            "model": prior_type,
            "variable": variable,
            "mse": float(np.mean((posterior.expectation[part] - t) ** 2)),
            "posterior_coverage": float(np.mean((t >= posterior.lower[part]) & (t <= posterior.upper[part]))),
            "prior_coverage": float(np.mean((t >= prior.lower[part]) & (t <= prior.upper[part]))),
        })
    return rows


def run_replicate(config: CaseStudyConfig, seed: int, replicate: int = 0) -> ReplicateResult:
    """
    One synthetic replicate

    Args:
        config: Study settings
        seed: Study seed; every stage draws from its own child seed
        replicate: Replicate index

    Returns:
        ReplicateResult with table rows for both prior types
    """
    n = config.n
    truth_spec = build_truth(config)
    H = build_operator(config)

    truth = truth_spec.to_model().simulate(1, config.sampler, derive_seed(seed, replicate, _TRUTH)).samples[0]
    signal = H @ truth
    true_noise = noise_spec(config, signal)
    angles, block_diagonal = noise_layout(config)
    lik = GaussLinearLikelihood(H, true_noise.covariance(angles, n, block_diagonal))
    data = lik.observe(truth, np.random.default_rng(derive_seed(seed, replicate, _NOISE)))

    noise = true_noise
    if config.estimate_noise:
        noise = fit_noise_parameters(H, data, truth, angles, n, block_diagonal=block_diagonal)
        lik = GaussLinearLikelihood(H, noise.covariance(angles, n, block_diagonal))

    trend = fit_linear_trend(truth, n)
    d_bounds = config.inference.param_bounds["d"]
    fits = {"gaussian": fit_trivariate_gaussian(truth, n, trend, d_bounds, config.inference.optimizer_tol)}
    if config.fit_selection:
        fits["selection"] = fit_trivariate_selection(truth, n, trend, config.inference)
    else:
        fits["selection"] = TrivariateFit(truth_spec, float("nan"))

    posterior: Dict[str, Predictions] = {}
    prior: Dict[str, Predictions] = {}
    rows: List[Dict[str, Any]] = []
    for prior_type in PRIOR_TYPES:
        model = fits[prior_type].prior.to_model()
        post = posterior_model(model, lik, data)
        posterior[prior_type] = predict_all(
            post,
            config.quantile_alpha,
            config.n_realizations,
            derive_seed(seed, replicate, _POSTERIOR),
            config.sampler,
            with_map=False,
        )
        prior[prior_type] = prior_predictions(
            model,
            config.quantile_alpha,
            config.n_realizations,
            derive_seed(seed, replicate, _PRIOR),
            config.sampler,
        )
        rows.extend(_score(truth, posterior[prior_type], prior[prior_type], n, prior_type))

    for row in rows:
        logger.info(
            f"replicate {replicate} {row['model']:>9} {row['variable']:<7} mse={row['mse']:.5f} "
            f"post80={row['posterior_coverage']:.2f} prior80={row['prior_coverage']:.2f}"
        )
    return ReplicateResult(replicate, seed, truth, data, noise, fits, posterior, prior, rows)


def run_case_study(config: Optional[CaseStudyConfig] = None, seed: Optional[int] = None) -> CaseStudyReport:
    """All replicates in sequence; the command layer runs them concurrently instead"""
    config = config or CaseStudyConfig(schema_version=1)
    seed = config.seed if seed is None else seed
    results = [run_replicate(config, seed, k) for k in range(config.n_replicates)]
    return CaseStudyReport(results, list(config.bimodal_variables))
