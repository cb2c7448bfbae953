"""
fit: maximum likelihood estimate of the stationary prior from one training image
"""
from typing import Any, Dict

import numpy as np

from experiment_framework.base_command import BaseCommand
from selgauss.config import FitConfig
from selgauss.core.gaussian import GridSpec
from selgauss.errors import ConfigError
from selgauss.inference.mle import fit_gaussian_mle, fit_mle
from selgauss.io.tables import read_vector, write_json, write_table
from selgauss.recipes import build_model


class FitCommand(BaseCommand):
    config_model = FitConfig

    async def run(self, config: FitConfig, seed: int) -> Dict[str, Any]:
        grid = GridSpec(tuple(config.grid))
        if config.training_image is not None:
            r_obs = read_vector(config.training_image)
        else:
            if list(config.model.grid) != list(config.grid):
                raise ConfigError(f"model grid {config.model.grid} differs from fit grid {config.grid}")
            r_obs = build_model(config.model).simulate(1, config.sampler, seed).samples[0]
        if r_obs.size != grid.n_nodes:
            raise ConfigError(f"training image has {r_obs.size} values, grid has {grid.n_nodes} nodes")

        result, gaussian = await self.run_jobs([
            lambda: fit_mle(r_obs, grid, config.inference),
            lambda: fit_gaussian_mle(r_obs, grid, config.inference.correlation_family, config.inference.param_bounds)
            if config.gaussian_reference else None,
        ])

        write_table(self.output_path("training_image.csv"), {"node": np.arange(r_obs.size), "value": r_obs})
        document = {"fit": result.to_dict(), "inference": config.inference.model_dump(), "grid": grid.to_dict()}
        if gaussian is not None:
            document["gaussian_fit"] = gaussian.to_dict()
        write_json(self.output_path("fit.json"), document)
        self.logger.info(f"fit: theta={result.theta_hat.as_tuple()}, converged={result.converged}")
        return self.create_response(True, self.name, {"theta_hat": result.theta_hat.to_dict(), "converged": result.converged})
