"""
simulate-prior: realizations, spatial histograms, QQ data and marginal curves of prior cases
"""
from typing import Any, Dict

import numpy as np
import pandas as pd

from experiment_framework.base_command import BaseCommand
from selgauss.config import PriorCaseConfig, SamplerConfig, SimulatePriorConfig
from selgauss.core.gaussian import derive_seed
from selgauss.io.tables import write_chain, write_json, write_table
from selgauss.models.selection import SelectionGaussianModel, marginal_density, simulate_prior
from selgauss.models.summaries import histogram_table, marginal_moments, moment_matched_curve, qq_table
from selgauss.recipes import build_model, model_grid
from selgauss.sampling.mvn_prob import ProbEstimator

MARGINAL_HALF_WIDTH_SD = 4.0


class SimulatePriorCommand(BaseCommand):
    config_model = SimulatePriorConfig

    async def run(self, config: SimulatePriorConfig, seed: int) -> Dict[str, Any]:
        jobs = [
            (lambda case=case, k=k: self._run_case(case, config.sampler, config.marginal_n_mc, derive_seed(seed, k)))
            for k, case in enumerate(config.cases)
        ]
        summaries = await self.run_jobs(jobs)
        write_table(self.output_path("summary.csv"), pd.DataFrame(summaries))
        self.logger.info(f"simulate-prior: {len(summaries)} cases written to {self.out_dir}")
        return self.create_response(True, self.name, {"cases": [s["case"] for s in summaries]})

    def _central_node(self, case: PriorCaseConfig, model: SelectionGaussianModel) -> int:
        if case.marginal_node is not None:
            return min(case.marginal_node, model.n - 1)
        grid = model_grid(case.model)
        if grid is None:
            return model.n // 2
        return grid.node_index([d // 2 for d in grid.dims])

    def _run_case(self, case: PriorCaseConfig, sampler: SamplerConfig, n_mc: int, seed: int) -> Dict[str, Any]:
        model = build_model(case.model)
        realizations = simulate_prior(model, case.n_realizations, sampler, seed)
        values = realizations.samples.reshape(-1)

        write_chain(self.output_path(case.name, "realizations.csv"), realizations.samples, realizations.to_dict())
        write_table(self.output_path(case.name, "histogram.csv"), histogram_table(values, case.n_bins))
        write_table(self.output_path(case.name, "qq.csv"), qq_table(values))

        node = self._central_node(case, model)
        if model.n <= case.max_marginal_nodes:
            center = float(model.mu_r[node])
            sd = float(np.sqrt(model.sigma_r[node, node]))
            grid = center + sd * np.linspace(-MARGINAL_HALF_WIDTH_SD, MARGINAL_HALF_WIDTH_SD, case.marginal_points)
            density, std_error = marginal_density(model, node, grid, ProbEstimator(n_samples=n_mc, seed=seed))
            write_table(self.output_path(case.name, "marginal.csv"), {
                "value": grid,
                "density": density,
                "std_error": std_error,
                "gaussian_density": moment_matched_curve(grid, density),
            })
        else:
            self.logger.warning(
                f"{case.name}: exact marginal curve skipped for n={model.n} > {case.max_marginal_nodes} nodes"
            )

        summary = {"case": case.name, "marginal_node": node, "acceptance_rate": realizations.acceptance_rate}
        summary.update(marginal_moments(values))
        write_json(self.output_path(case.name, "summary.json"), summary)
        self.logger.info(
            f"{case.name}: skewness={summary['skewness']:.3f}, kurtosis={summary['excess_kurtosis']:.3f}, "
            f"modes={summary['n_modes']}, acceptance={summary['acceptance_rate']:.3f}"
        )
        return summary
