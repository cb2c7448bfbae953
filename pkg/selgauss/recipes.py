"""
Built-in experiment designs

The prior gallery (six stationary cases on a 64 x 64 grid), the four
posterior cases on a 128-node line with two exact observations, the
inference study truth and the seismic synthetic study. Each verb runs its
recipe when no --config is given.
"""
from typing import Any, Callable, Dict, Optional, Sequence, Tuple, Union

from selgauss.config import (
    CaseStudyConfig,
    CorrelationConfig,
    FitConfig,
    GeneralModelConfig,
    InvertCaseConfig,
    InvertConfig,
    ModelConfig,
    ObservationConfig,
    PriorCaseConfig,
    ReplicateStudyConfig,
    SimulatePriorConfig,
    StationaryModelConfig,
)
from selgauss.core.gaussian import CorrelationSpec, GridSpec
from selgauss.models.selection import SelectionGaussianModel, StationaryPriorSpec, expand_stationary
from selgauss.models.selection_sets import IntervalUnion

INF = None

# case: (gamma, d_h, d_v, A_i, description); mu = 0, sigma2 = 1
PRIOR_CASES: Dict[int, Tuple[float, float, float, list, str]] = {
    1: (0.8, 2.0, 2.0, [(INF, -0.3), (0.3, INF)], "sym. bimodal iso."),
    2: (0.65, 6.0, 0.85, [(INF, -0.3), (0.3, INF)], "sym. bimodal aniso."),
    3: (0.925, 2.0, 0.6, [(INF, -0.85), (0.8, INF)], "asym. bimodal aniso."),
    4: (0.9995, 3.0, 3.0, [(-0.45, -0.2), (-0.1, 0.1), (0.2, 0.45)], "sym. trimodal iso."),
    5: (0.7, 2.0, 2.0, [(INF, -0.7), (-0.1, 2.5)], "asym. unimodal iso."),
    6: (0.7, 2.0, 2.0, [(INF, -1.75), (-0.5, 0.5), (1.75, INF)], "sym. heavy tailed iso."),
}

# case: (gamma, d, A_i, description, conditioning values)
POSTERIOR_CASES: Dict[int, Tuple[float, float, list, str, Tuple[float, float]]] = {
    1: (0.9, 4.0, [(INF, -0.4), (0.4, INF)], "sym. bimodal", (2.5, -2.5)),
    2: (0.999, 4.0, [(-0.65, -0.4), (-0.12, 0.12), (0.4, 0.65)], "sym. trimodal", (0.55, -0.55)),
    3: (0.6, 4.0, [(INF, -1.5), (-0.5, 0.5)], "asym. unimodal", (1.0, -3.0)),
    4: (0.7, 4.0, [(INF, -1.75), (-0.5, 0.5), (1.75, INF)], "sym. heavy tailed", (3.0, -3.0)),
}
POSTERIOR_GRID = 128
# 1-based grid positions 16 and 112
OBSERVATION_NODES = (15, 111)

INFERENCE_TRUTH = {"mu": 0.0, "sigma2": 1.0, "d": 2.0, "gamma": 0.8, "a": 0.3}


def prior_case(case: int, grid: Sequence[int] = (64, 64), n_realizations: int = 1) -> PriorCaseConfig:
    gamma, d_h, d_v, a_set, _ = PRIOR_CASES[case]
    ranges = [d_h, d_v] if len(grid) == 2 else [d_h]
    model = StationaryModelConfig(
        gamma=gamma,
        correlation=CorrelationConfig(family="second_order_exponential", ranges=ranges),
        grid=list(grid),
        a_set=a_set,
    )
    return PriorCaseConfig(name=f"case{case}", model=model, n_realizations=n_realizations)


def simulate_prior_recipe(grid: Sequence[int] = (64, 64), cases: Sequence[int] = tuple(PRIOR_CASES)) -> SimulatePriorConfig:
    return SimulatePriorConfig(schema_version=1, cases=[prior_case(case, grid) for case in cases])


def posterior_case(case: int, n: int = POSTERIOR_GRID, with_map: bool = True) -> InvertCaseConfig:
    gamma, d, a_set, _, values = POSTERIOR_CASES[case]
    model = StationaryModelConfig(
        gamma=gamma,
        correlation=CorrelationConfig(family="second_order_exponential", ranges=[d]),
        grid=[n],
        a_set=a_set,
    )
    nodes = OBSERVATION_NODES if n == POSTERIOR_GRID else (n // 8, n - 1 - n // 8)
    observations = [ObservationConfig(index=i, value=v) for i, v in zip(nodes, values)]
    return InvertCaseConfig(name=f"case{case}", model=model, observations=observations, with_map=with_map)


def invert_recipe(n: int = POSTERIOR_GRID, cases: Sequence[int] = tuple(POSTERIOR_CASES)) -> InvertConfig:
    return InvertConfig(schema_version=1, cases=[posterior_case(case, n) for case in cases])


def inference_truth_model(grid: Sequence[int]) -> StationaryModelConfig:
    truth = INFERENCE_TRUTH
    return StationaryModelConfig(
        mu=truth["mu"],
        sigma2=truth["sigma2"],
        gamma=truth["gamma"],
        correlation=CorrelationConfig(family="second_order_exponential", ranges=[truth["d"]]),
        grid=list(grid),
        a_set=[(INF, -truth["a"]), (truth["a"], INF)],
    )


def fit_recipe(grid: Sequence[int] = (16, 16)) -> FitConfig:
    return FitConfig(schema_version=1, grid=list(grid), model=inference_truth_model(grid))


def replicate_study_recipe(grid_sizes: Sequence[int] = (8, 16), n_replicates: int = 50) -> ReplicateStudyConfig:
    return ReplicateStudyConfig(
        schema_version=1,
        truth=dict(INFERENCE_TRUTH),
        grid_sizes=list(grid_sizes),
        n_replicates=n_replicates,
    )


def casestudy_recipe() -> CaseStudyConfig:
    return CaseStudyConfig(schema_version=1)


RECIPES: Dict[str, Callable[[], Any]] = {
    "simulate-prior": simulate_prior_recipe,
    "invert": invert_recipe,
    "fit": fit_recipe,
    "replicate-study": replicate_study_recipe,
    "casestudy": casestudy_recipe,
}


def stationary_spec(config: StationaryModelConfig) -> StationaryPriorSpec:
    return StationaryPriorSpec(
        mu=config.mu,
        sigma2=config.sigma2,
        gamma=config.gamma,
        corr=CorrelationSpec(config.correlation.family, tuple(config.correlation.ranges)),
        grid=GridSpec(tuple(config.grid)),
        a_set=IntervalUnion(config.a_set),
    )


def build_model(config: Union[ModelConfig, Dict[str, Any]]) -> SelectionGaussianModel:
    """General form of a stationary or explicit model document"""
    if isinstance(config, StationaryModelConfig):
        return expand_stationary(stationary_spec(config))
    if isinstance(config, GeneralModelConfig):
        config = config.model_dump()
    return SelectionGaussianModel.from_dict(dict(config))


def model_grid(config: ModelConfig) -> Optional[GridSpec]:
    return GridSpec(tuple(config.grid)) if isinstance(config, StationaryModelConfig) else None

