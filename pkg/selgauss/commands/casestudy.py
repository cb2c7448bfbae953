"""
casestudy: synthetic seismic profile inversion under selection and Gaussian priors
"""
from typing import Any, Dict

import numpy as np
import pandas as pd

from experiment_framework.base_command import BaseCommand
from selgauss.config import CaseStudyConfig
from selgauss.io.tables import write_json, write_table
from selgauss.seismic.casestudy import PRIOR_TYPES, CaseStudyReport, ReplicateResult, run_replicate
from selgauss.seismic.forward import VARIABLE_NAMES


def profile_table(result: ReplicateResult, n: int) -> pd.DataFrame:
    """Truth and predictions along the profile, one row per (variable, sample)"""
    table: Dict[str, Any] = {
        "variable": np.repeat(VARIABLE_NAMES, n),
        "sample": np.tile(np.arange(n), len(VARIABLE_NAMES)),
        "truth": result.truth,
    }
    for prior_type in PRIOR_TYPES:
        predictions = result.posterior[prior_type]
        table[f"{prior_type}_E"] = predictions.expectation
        table[f"{prior_type}_lower"] = predictions.lower
        table[f"{prior_type}_upper"] = predictions.upper
        table[f"{prior_type}_prior_E"] = result.prior[prior_type].expectation
    return pd.DataFrame(table)


class CaseStudyCommand(BaseCommand):
    config_model = CaseStudyConfig

    async def run(self, config: CaseStudyConfig, seed: int) -> Dict[str, Any]:
        jobs = [(lambda k=k: run_replicate(config, seed, k)) for k in range(config.n_replicates)]
        report = CaseStudyReport(await self.run_jobs(jobs), list(config.bimodal_variables))

        columns = ["replicate", "model", "variable", "mse", "posterior_coverage", "prior_coverage"]
        write_table(self.output_path("table.csv"), pd.DataFrame(report.table_rows())[columns])
        write_table(self.output_path("summary.csv"), pd.DataFrame(report.summary_rows()))
        write_json(self.output_path("report.json"), report.to_dict())
        for result in report.replicates:
            write_table(self.output_path(f"replicate_{result.replicate}", "profiles.csv"), profile_table(result, config.n))
            write_table(self.output_path(f"replicate_{result.replicate}", "data.csv"),
                        {"index": np.arange(result.data.size), "value": result.data})

        improvement = report.improvement_fraction()
        self.logger.info(f"casestudy: {len(report.replicates)} replicates, selection MSE better in {improvement}")
        return self.create_response(True, self.name, {"improvement_fraction": improvement})
