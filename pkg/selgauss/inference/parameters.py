"""
Stationary prior parameters and their unconstrained optimizer coordinates
"""
from dataclasses import asdict, dataclass
from typing import Any, Callable, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.stats import qmc

from selgauss.core.gaussian import CorrelationSpec, GridSpec
from selgauss.errors import ParameterDomainError
from selgauss.models.selection import StationaryPriorSpec
from selgauss.models.selection_sets import IntervalUnion

PARAM_NAMES = ("mu", "sigma2", "d", "gamma", "a")


def selection_union(family: str, a: float) -> IntervalUnion:
    """Single-component selection set of a parameterization family"""
    if family == "symmetric_two_sided":
        return IntervalUnion.symmetric_two_sided(a)
    if family == "one_sided":
        return IntervalUnion.one_sided(a)
    raise ParameterDomainError(f"Unknown selection family: {family}")


@dataclass(frozen=True)
class StationaryParams:
    """theta_p = (mu, sigma2, d, gamma, a) of the stationary prior"""
    mu: float
    sigma2: float
    d: float
    gamma: float
    a: float

    def as_tuple(self) -> Tuple[float, ...]:
        return tuple(getattr(self, name) for name in PARAM_NAMES)

    def to_dict(self) -> Dict[str, float]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Mapping[str, float]) -> "StationaryParams":
        return cls(**{name: float(data[name]) for name in PARAM_NAMES})

    def to_spec(
        self,
        grid: GridSpec,
        correlation_family: str = "second_order_exponential",
        selection_family: str = "symmetric_two_sided",
    ) -> StationaryPriorSpec:
        return StationaryPriorSpec(
            mu=self.mu,
            sigma2=self.sigma2,
            gamma=self.gamma,
            corr=CorrelationSpec(correlation_family, (self.d,)),
            grid=grid,
            a_set=selection_union(selection_family, self.a),
        )


def _softplus(x: float) -> float:
    return float(np.logaddexp(0.0, x))


def _softplus_inv(y: float) -> float:
    return float(y + np.log(-np.expm1(-y)))


# natural scale -> unconstrained, and back
TRANSFORMS: Dict[str, Tuple[Callable[[float], float], Callable[[float], float]]] = {
    "mu": (float, float),
    "sigma2": (lambda v: float(np.log(v)), lambda x: float(np.exp(x))),
    "d": (lambda v: float(np.log(v)), lambda x: float(np.exp(x))),
    "gamma": (lambda v: float(np.arctanh(v)), lambda x: float(np.tanh(x))),
    "a": (_softplus_inv, _softplus),
}


class ParameterSpace:
    """
    Bounded free parameters mapped to an unconstrained optimizer vector

    Fixed parameters are held at their values and excluded from the vector.
    """

    def __init__(self, bounds: Mapping[str, Tuple[float, float]], fixed: Optional[Mapping[str, float]] = None):
        self.bounds = {name: (float(bounds[name][0]), float(bounds[name][1])) for name in PARAM_NAMES}
        self.fixed = {name: float(v) for name, v in (fixed or {}).items()}
        unknown = set(self.fixed) - set(PARAM_NAMES)
        if unknown:
            raise ParameterDomainError(f"Unknown fixed parameters: {sorted(unknown)}")
        self.free: List[str] = [name for name in PARAM_NAMES if name not in self.fixed]

    @property
    def n_free(self) -> int:
        return len(self.free)

    def transformed_bounds(self) -> List[Tuple[float, float]]:
        """Bounds of the unconstrained coordinates"""
        return [tuple(TRANSFORMS[name][0](v) for v in self.bounds[name]) for name in self.free]

    def to_unconstrained(self, params: StationaryParams) -> np.ndarray:
        values = params.to_dict()
        return np.array([TRANSFORMS[name][0](values[name]) for name in self.free])

    def from_unconstrained(self, x: Sequence[float]) -> StationaryParams:
        values = dict(self.fixed)
        for name, xi in zip(self.free, x):
            lo, hi = self.bounds[name]
            values[name] = float(np.clip(TRANSFORMS[name][1](xi), lo, hi))
        return StationaryParams.from_dict(values)

    def within_bounds(self, params: StationaryParams) -> bool:
        values = params.to_dict()
        return all(self.bounds[n][0] <= values[n] <= self.bounds[n][1] for n in self.free)

    def latin_hypercube_starts(self, n_starts: int, seed: int) -> List[StationaryParams]:
        """Space-filling starting points on the natural scale"""
        if not self.free:
            return [StationaryParams.from_dict(self.fixed)]
        sampler = qmc.LatinHypercube(d=self.n_free, seed=seed)
        lows = [self.bounds[name][0] for name in self.free]
        highs = [self.bounds[name][1] for name in self.free]
        points = qmc.scale(sampler.random(n_starts), lows, highs)
        starts = []
        for point in points:
            values = dict(self.fixed)
            values.update(zip(self.free, (float(v) for v in point)))
            starts.append(StationaryParams.from_dict(values))
        return starts

    def to_dict(self) -> Dict[str, Any]:
        return {"bounds": {k: list(v) for k, v in self.bounds.items()}, "fixed": dict(self.fixed)}
