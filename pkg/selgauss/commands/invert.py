"""
invert: posterior realizations, E/MED/MAP predictions and intervals for conditioning cases
"""
from typing import Any, Dict

import numpy as np
import pandas as pd

from experiment_framework.base_command import BaseCommand
from selgauss.config import InvertCaseConfig, InvertConfig, MapSearchConfig, SamplerConfig
from selgauss.core.gaussian import derive_seed
from selgauss.errors import ParameterDomainError
from selgauss.inversion.likelihood import GaussLinearLikelihood
from selgauss.inversion.posterior import log_data_marginal, posterior_model, simulate_posterior
from selgauss.inversion.prediction import marginal_posterior_density, predict_all
from selgauss.io.tables import write_chain, write_json, write_table
from selgauss.models.summaries import histogram_table, marginal_moments
from selgauss.recipes import build_model
from selgauss.sampling.mvn_prob import ProbEstimator


class InvertCommand(BaseCommand):
    config_model = InvertConfig

    async def run(self, config: InvertConfig, seed: int) -> Dict[str, Any]:
        jobs = [
            (lambda case=case, k=k: self._run_case(case, config.sampler, config.map_search, derive_seed(seed, k)))
            for k, case in enumerate(config.cases)
        ]
        summaries = await self.run_jobs(jobs)
        write_table(self.output_path("summary.csv"), pd.DataFrame(summaries))
        self.logger.info(f"invert: {len(summaries)} cases written to {self.out_dir}")
        return self.create_response(True, self.name, {"cases": [s["case"] for s in summaries]})

    def _run_case(self, case: InvertCaseConfig, sampler: SamplerConfig, map_search: MapSearchConfig, seed: int) -> Dict[str, Any]:
        prior = build_model(case.model)
        indices = [obs.index for obs in case.observations]
        if max(indices) >= prior.n:
            raise ParameterDomainError(f"{case.name}: observation index {max(indices)} outside n={prior.n}")
        d = np.array([obs.value for obs in case.observations])
        lik = GaussLinearLikelihood.exact(prior.n, indices, eps=case.noise_variance)

        post = posterior_model(prior, lik, d)
        realizations = simulate_posterior(post, case.n_realizations, sampler, seed)
        predictions = predict_all(
            post,
            case.quantile_alpha,
            realizations=realizations,
            map_config=map_search,
            with_map=case.with_map,
        )
        log_evidence, evidence_se = log_data_marginal(prior, lik, d, ProbEstimator(n_samples=map_search.n_mc, seed=seed))

        write_chain(self.output_path(case.name, "posterior_realizations.csv"), realizations.samples, realizations.to_dict())
        write_table(self.output_path(case.name, "predictions.csv"), {
            "node": np.arange(prior.n),
            "E": predictions.expectation,
            "MED": predictions.median,
            "MAP": predictions.map,
            "lower": predictions.lower,
            "upper": predictions.upper,
        })
        write_table(self.output_path(case.name, "histogram.csv"), histogram_table(realizations.samples, case.n_bins))
        curve_estimator = ProbEstimator(n_samples=map_search.n_mc, seed=seed)
        for node in case.marginal_nodes:
            if not 0 <= node < prior.n:
                raise ParameterDomainError(f"{case.name}: marginal node {node} outside n={prior.n}")
            center = float(post.mu_r_d[node])
            sd = max(float(np.sqrt(post.sigma_r_d[node, node])), 1e-6)
            grid = center + sd * np.linspace(-map_search.half_width_sd, map_search.half_width_sd, case.marginal_points)
            density, std_error = marginal_posterior_density(post, node, grid, curve_estimator)
            write_table(self.output_path(case.name, f"marginal_{node}.csv"), {
                "value": grid,
                "density": density,
                "std_error": std_error,
            })

        honored = float(np.max(np.abs(realizations.samples[:, indices] - d)))
        summary = {
            "case": case.name,
            "acceptance_rate": realizations.acceptance_rate,
            "max_observation_misfit": honored,
            "map_fallbacks": len(predictions.map_fallbacks),
            "log_data_marginal": log_evidence,
            "log_data_marginal_se": evidence_se,
            "n_modes": marginal_moments(realizations.samples)["n_modes"],
        }
        write_json(self.output_path(case.name, "summary.json"), dict(summary, predictions=predictions.to_dict()))
        self.logger.info(f"{case.name}: misfit={honored:.2e}, acceptance={realizations.acceptance_rate:.3f}")
        return summary
