"""
replicate-study: sampling distribution of the maximum likelihood estimator over training image sizes
"""
from typing import Any, Dict, List

import numpy as np
import pandas as pd

from experiment_framework.base_command import BaseCommand
from selgauss.config import InferenceConfig, ReplicateStudyConfig, SamplerConfig
from selgauss.core.gaussian import GridSpec, derive_seed
from selgauss.inference.mle import fit_mle
from selgauss.inference.parameters import PARAM_NAMES, StationaryParams
from selgauss.io.tables import write_json, write_table
from selgauss.models.selection import expand_stationary


def run_single_replicate(
    truth: StationaryParams,
    size: int,
    replicate: int,
    inference: InferenceConfig,
    sampler: SamplerConfig,
    seed: int,
) -> Dict[str, Any]:
    """Simulate one size x size training image from truth and fit it"""
    grid = GridSpec((size, size))
    spec = truth.to_spec(grid, inference.correlation_family, inference.selection_family)
    r_obs = expand_stationary(spec).simulate(1, sampler, seed).samples[0]
    result = fit_mle(r_obs, grid, inference)
    row = {"replicate": replicate, "grid_size": size}
    row.update(result.theta_hat.to_dict())
    row.update({"loglik": result.log_lik, "converged": result.converged, "seed": seed})
    return row


def summarize_estimates(estimates: pd.DataFrame, truth: StationaryParams, level: float) -> pd.DataFrame:
    """Mean, empirical interval and mean absolute error per grid size and parameter"""
    tail = (1.0 - level) / 2.0
    true_values = truth.to_dict()
    rows: List[Dict[str, Any]] = []
    for size, group in estimates.groupby("grid_size", sort=True):
        for name in PARAM_NAMES:
            values = group[name].to_numpy(dtype=float)
            rows.append({
                "grid_size": int(size),
                "parameter": name,
                "truth": true_values[name],
                "mean": float(np.mean(values)),
                "lower": float(np.quantile(values, tail)),
                "upper": float(np.quantile(values, 1.0 - tail)),
                "mae": float(np.mean(np.abs(values - true_values[name]))),
            })
    return pd.DataFrame(rows)


def gamma_a_correlation(estimates: pd.DataFrame) -> Dict[int, float]:
    out = {}
    for size, group in estimates.groupby("grid_size", sort=True):
        if len(group) > 2 and group["gamma"].std() > 0 and group["a"].std() > 0:
            out[int(size)] = float(np.corrcoef(group["gamma"], group["a"])[0, 1])
        else:
            out[int(size)] = float("nan")
    return out


class ReplicateStudyCommand(BaseCommand):
    config_model = ReplicateStudyConfig

    async def run(self, config: ReplicateStudyConfig, seed: int) -> Dict[str, Any]:
        truth = StationaryParams.from_dict(config.truth)
        jobs = [
            (lambda size=size, k=k: run_single_replicate(
                truth, size, k, config.inference, config.sampler, derive_seed(seed, size, k)
            ))
            for size in config.grid_sizes
            for k in range(config.n_replicates)
        ]
        estimates = pd.DataFrame(await self.run_jobs(jobs))
        summary = summarize_estimates(estimates, truth, config.interval_level)
        correlations = gamma_a_correlation(estimates)

        write_table(self.output_path("estimates.csv"), estimates)
        write_table(self.output_path("summary.csv"), summary)
        write_json(self.output_path("summary.json"), {
            "truth": truth.to_dict(),
            "interval_level": config.interval_level,
            "gamma_a_correlation": correlations,
            "non_converged": int((~estimates["converged"].astype(bool)).sum()),
        })
        self.logger.info(f"replicate-study: {len(estimates)} fits, gamma-a correlation {correlations}")
        return self.create_response(True, self.name, {"n_fits": len(estimates)})
