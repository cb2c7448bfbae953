"""
Configuration models

Library-level configs (sampler, inference, MAP search) and the experiment
documents read by the CLI. All models reject unknown fields.
"""
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

SCHEMA_VERSION = 1

Bound = Optional[float]
IntervalList = List[Tuple[Bound, Bound]]


class FrozenModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


# --------------------------------------------------------------------------
# Library configs
# --------------------------------------------------------------------------

class SamplerConfig(FrozenModel):
    """Blocked Metropolis-Hastings settings"""
    block_size: int = Field(100, gt=0)
    n_burnin: Optional[int] = Field(None, ge=0)  # None: 10 x dimension
    n_thin: int = Field(1, ge=1)
    max_init_tries: int = Field(100, gt=0)
    element_selection: Literal["uniform", "stratified"] = "uniform"
    n_eligible: Optional[int] = Field(None, gt=0)  # None: every element
    max_cached_blocks: int = Field(1024, gt=0)

    def burnin_for(self, dimension: int) -> int:
        return 10 * dimension if self.n_burnin is None else self.n_burnin


DEFAULT_BOUNDS: Dict[str, Tuple[float, float]] = {
    "mu": (-2.0, 2.0),
    "sigma2": (0.1, 10.0),
    "d": (0.5, 8.0),
    "gamma": (0.0, 0.99),
    "a": (0.01, 2.0),
}


class InferenceConfig(FrozenModel):
    """Maximum likelihood fit settings for the stationary prior"""
    param_bounds: Dict[str, Tuple[float, float]] = Field(default_factory=lambda: dict(DEFAULT_BOUNDS))
    n_mc: int = Field(5000, ge=100)
    n_restarts: int = Field(5, ge=1)
    optimizer_tol: float = Field(1e-5, gt=0)
    max_iter: int = Field(2000, gt=0)
    frozen_seed: int = 0
    fixed: Dict[str, float] = Field(default_factory=dict)
    selection_family: Literal["symmetric_two_sided", "one_sided"] = "symmetric_two_sided"
    correlation_family: Literal["second_order_exponential", "exponential"] = "second_order_exponential"

    @field_validator("param_bounds", mode="before")
    @classmethod
    def _merge_defaults(cls, value):
        merged = dict(DEFAULT_BOUNDS)
        merged.update(value or {})
        return merged

    @model_validator(mode="after")
    def _check_bounds(self):
        unknown = set(self.param_bounds) - set(DEFAULT_BOUNDS)
        if unknown:
            raise ValueError(f"unknown parameters in param_bounds: {sorted(unknown)}")
        unknown = set(self.fixed) - set(DEFAULT_BOUNDS)
        if unknown:
            raise ValueError(f"unknown parameters in fixed: {sorted(unknown)}")
        for name, (lo, hi) in self.param_bounds.items():
            if not (float("-inf") < lo < hi < float("inf")):
                raise ValueError(f"bounds for {name} must be finite and ordered, got ({lo}, {hi})")
        g_lo, g_hi = self.param_bounds["gamma"]
        if g_lo <= -1.0 or g_hi >= 1.0:
            raise ValueError("gamma bounds must lie strictly inside (-1, 1)")
        for name in ("sigma2", "d", "a"):
            if self.param_bounds[name][0] <= 0:
                raise ValueError(f"lower bound of {name} must be positive")
        return self


class MapSearchConfig(FrozenModel):
    """Per-node marginal posterior maximization"""
    n_grid: int = Field(201, ge=5)
    half_width_sd: float = Field(5.0, gt=0)
    xtol: float = Field(1e-6, gt=0)
    n_mc: int = Field(1000, ge=100)
    seed: int = 0


# --------------------------------------------------------------------------
# Experiment documents
# --------------------------------------------------------------------------

class CorrelationConfig(FrozenModel):
    family: Literal["second_order_exponential", "exponential"] = "second_order_exponential"
    ranges: List[float] = Field(min_length=1)


class StationaryModelConfig(FrozenModel):
    """Stationary prior on a regular grid; a_set is a list of [low, high] with null for infinity"""
    mu: float = 0.0
    sigma2: float = Field(1.0, gt=0)
    gamma: float = Field(ge=-1.0, le=1.0)
    correlation: CorrelationConfig
    grid: List[int] = Field(min_length=1, max_length=3)
    a_set: IntervalList = Field(default_factory=lambda: [(None, None)])


class GeneralModelConfig(FrozenModel):
    """Explicit general form, as written by SelectionGaussianModel.to_dict"""
    mu_r: List[float]
    sigma_r: List[List[float]]
    mu_nu: List[float]
    gamma_nu_r: List[List[float]]
    sigma_nu_r: List[List[float]]
    selection: List[IntervalList]


ModelConfig = Union[StationaryModelConfig, GeneralModelConfig]


class ExperimentConfig(FrozenModel):
    schema_version: Literal[1]
    seed: int = 0
    sampler: SamplerConfig = Field(default_factory=SamplerConfig)


class PriorCaseConfig(FrozenModel):
    name: str
    model: ModelConfig
    n_realizations: int = Field(1, ge=1)
    n_bins: int = Field(40, ge=2)
    marginal_node: Optional[int] = Field(None, ge=0)  # None: central node
    marginal_points: int = Field(41, ge=3)
    max_marginal_nodes: int = Field(400, ge=1)  # exact marginal curve skipped above this size


class SimulatePriorConfig(ExperimentConfig):
    cases: List[PriorCaseConfig] = Field(min_length=1)
    marginal_n_mc: int = Field(1000, ge=100)


class ObservationConfig(FrozenModel):
    index: int = Field(ge=0)
    value: float


class InvertCaseConfig(FrozenModel):
    name: str
    model: ModelConfig
    observations: List[ObservationConfig] = Field(min_length=1)
    noise_variance: float = Field(1e-10, gt=0)
    n_realizations: int = Field(500, ge=2)
    quantile_alpha: float = Field(0.2, gt=0, lt=1)
    with_map: bool = True
    n_bins: int = Field(40, ge=2)
    marginal_nodes: List[int] = Field(default_factory=list)  # posterior marginal curves written per node
    marginal_points: int = Field(41, ge=3)


class InvertConfig(ExperimentConfig):
    cases: List[InvertCaseConfig] = Field(min_length=1)
    map_search: MapSearchConfig = Field(default_factory=MapSearchConfig)


class FitConfig(ExperimentConfig):
    """Single fit; the training image is read from CSV or simulated from `model`"""
    training_image: Optional[str] = None
    grid: List[int] = Field(min_length=1, max_length=3)
    model: Optional[StationaryModelConfig] = None
    inference: InferenceConfig = Field(default_factory=InferenceConfig)
    gaussian_reference: bool = True

    @model_validator(mode="after")
    def _check_source(self):
        if (self.training_image is None) == (self.model is None):
            raise ValueError("exactly one of training_image and model must be given")
        return self


class ReplicateStudyConfig(ExperimentConfig):
    truth: Dict[str, float]
    grid_sizes: List[int] = Field(default_factory=lambda: [8, 16], min_length=1)
    n_replicates: int = Field(50, ge=1)
    inference: InferenceConfig = Field(default_factory=InferenceConfig)
    interval_level: float = Field(0.9, gt=0, lt=1)

    @field_validator("truth")
    @classmethod
    def _check_truth(cls, value):
        if set(value) != set(DEFAULT_BOUNDS):
            raise ValueError(f"truth must set exactly {sorted(DEFAULT_BOUNDS)}")
        return value


class TrivariatePriorConfig(FrozenModel):
    trend: List[Tuple[float, float]] = Field(min_length=3, max_length=3)
    sigma: List[List[float]] = Field(min_length=3, max_length=3)
    gamma: List[float] = Field(min_length=3, max_length=3)
    d_r: float = Field(gt=0)
    a: List[float] = Field(min_length=3, max_length=3)


class CaseStudyConfig(ExperimentConfig):
    """Synthetic seismic profile study; truth defaults to the reference trivariate prior"""
    n: int = Field(55, ge=4)
    truth: Optional[TrivariatePriorConfig] = None
    forward: Literal["seismic", "identity"] = "seismic"
    angles: List[float] = Field(default_factory=lambda: [12.0, 22.0, 31.0], min_length=1)
    peak_frequencies: List[float] = Field(default_factory=lambda: [30.0, 27.0, 24.0], min_length=1)
    sample_interval: float = Field(0.004, gt=0)
    wavelet_length: int = Field(31, ge=1)
    wavelet_files: Optional[List[str]] = None
    vs_vp_ratio: float = Field(0.5, gt=0)
    signal_to_noise: float = Field(2.0, gt=0)
    noise_variance: Optional[float] = Field(None, ge=0)  # overrides signal_to_noise
    noise_ranges: Tuple[float, float] = (7.3, 11.1)
    estimate_noise: bool = False
    fit_selection: bool = True
    inference: InferenceConfig = Field(
        default_factory=lambda: InferenceConfig(
            n_mc=1000, n_restarts=2, max_iter=1500, correlation_family="exponential",
            param_bounds={"d": (0.5, 8.0), "gamma": (0.0, 0.99), "a": (0.01, 1.0)},
        )
    )
    n_realizations: int = Field(500, ge=2)
    quantile_alpha: float = Field(0.2, gt=0, lt=1)
    n_replicates: int = Field(1, ge=1)
    bimodal_variables: List[Literal["log_vp", "log_vs", "log_rho"]] = Field(
        default_factory=lambda: ["log_vp", "log_vs"]
    )

    @model_validator(mode="after")
    def _check_angles(self):
        if self.wavelet_files is None and len(self.peak_frequencies) != len(self.angles):
            raise ValueError("one peak frequency per angle is required")
        if self.wavelet_files is not None and len(self.wavelet_files) != len(self.angles):
            raise ValueError("one wavelet file per angle is required")
        return self
