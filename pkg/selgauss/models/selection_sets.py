"""
Selection sets: per-component unions of intervals and their products
"""
from typing import Any, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from selgauss.errors import ParameterDomainError
from selgauss.sampling.truncnorm import nearest_point, log_union_mass

IntervalBound = Optional[float]


def _parse_bound(value: IntervalBound, default: float) -> float:
    if value is None:
        return default
    value = float(value)
    if np.isnan(value):
        raise ParameterDomainError("Interval endpoints must not be NaN")
    return value


def _dump_bound(value: float) -> Optional[float]:
    return None if np.isinf(value) else float(value)


class IntervalUnion:
    """
    Sorted union of strictly disjoint intervals, closed at finite endpoints

    Endpoints may be infinite; (-inf, inf) means the selection is inactive.
    """

    def __init__(self, intervals: Iterable[Sequence[IntervalBound]]):
        lows: List[float] = []
        highs: List[float] = []
        for interval in intervals:
            if len(interval) != 2:
                raise ParameterDomainError(f"Interval must be [lo, hi], got {interval!r}")
            lows.append(_parse_bound(interval[0], -np.inf))
            highs.append(_parse_bound(interval[1], np.inf))

        if not lows:
            raise ParameterDomainError("Interval union must contain at least one interval")
        for lo, hi in zip(lows, highs):
            if not lo < hi or lo == np.inf or hi == -np.inf:
                raise ParameterDomainError(f"Empty or degenerate interval [{lo}, {hi}]")
        for k in range(len(lows) - 1):
            if not highs[k] < lows[k + 1]:
                raise ParameterDomainError(
                    "Intervals must be sorted and strictly disjoint: "
                    f"[{lows[k]}, {highs[k]}] then [{lows[k + 1]}, {highs[k + 1]}]"
                )

        self.lows = np.array(lows)
        self.highs = np.array(highs)
        self.lows.setflags(write=False)
        self.highs.setflags(write=False)

    @classmethod
    def full(cls) -> "IntervalUnion":
        return cls([(None, None)])

    @classmethod
    def symmetric_two_sided(cls, a: float) -> "IntervalUnion":
        """(-inf, -a] U [a, inf); the whole line when a <= 0"""
        if a <= 0:
            return cls.full()
        return cls([(None, -a), (a, None)])

    @classmethod
    def one_sided(cls, a: float) -> "IntervalUnion":
        return cls([(a, None)])

    @classmethod
    def from_json(cls, data: Sequence[Sequence[IntervalBound]]) -> "IntervalUnion":
        return cls(data)

    def to_json(self) -> List[List[Optional[float]]]:
        return [[_dump_bound(lo), _dump_bound(hi)] for lo, hi in zip(self.lows, self.highs)]

    @property
    def n_intervals(self) -> int:
        return self.lows.size

    @property
    def is_full(self) -> bool:
        return self.n_intervals == 1 and self.lows[0] == -np.inf and self.highs[0] == np.inf

    def contains(self, x: Any) -> np.ndarray:
        x = np.asarray(x, dtype=float)[..., None]
        return np.any((x >= self.lows) & (x <= self.highs), axis=-1)

    def project(self, x: Any) -> np.ndarray:
        return nearest_point(self.lows, self.highs, np.ones(self.n_intervals, bool), x)

    def log_mass(self, mean: Any, std: Any) -> np.ndarray:
        return log_union_mass(self.lows, self.highs, np.ones(self.n_intervals, bool), mean, std)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, IntervalUnion):
            return NotImplemented
        return np.array_equal(self.lows, other.lows) and np.array_equal(self.highs, other.highs)

    def __hash__(self) -> int:
        return hash((tuple(self.lows), tuple(self.highs)))

    def __repr__(self) -> str:
        parts = [f"[{lo:g}, {hi:g}]" for lo, hi in zip(self.lows, self.highs)]
        return f"IntervalUnion({' U '.join(parts)})"


class SelectionSet:
    """
    Cartesian product of per-component interval unions

    Bounds are also held as padded (q, K) arrays so that masses, draws and
    membership vectorize over components.
    """

    def __init__(self, components: Sequence[IntervalUnion]):
        components = tuple(components)
        if not components:
            raise ParameterDomainError("Selection set needs at least one component")
        if not all(isinstance(c, IntervalUnion) for c in components):
            raise ParameterDomainError("Selection set components must be IntervalUnion instances")
        self.components: Tuple[IntervalUnion, ...] = components

        width = max(c.n_intervals for c in components)
        q = len(components)
        self.lows = np.full((q, width), np.inf)
        self.highs = np.full((q, width), np.inf)
        self.valid = np.zeros((q, width), dtype=bool)
        for i, comp in enumerate(components):
            k = comp.n_intervals
            self.lows[i, :k] = comp.lows
            self.highs[i, :k] = comp.highs
            self.valid[i, :k] = True
        for array in (self.lows, self.highs, self.valid):
            array.setflags(write=False)
        self._is_full = all(c.is_full for c in components)

    @classmethod
    def replicate(cls, union: IntervalUnion, q: int) -> "SelectionSet":
        return cls([union] * int(q))

    @classmethod
    def full(cls, q: int) -> "SelectionSet":
        return cls.replicate(IntervalUnion.full(), q)

    @classmethod
    def from_json(cls, data: Sequence[Sequence[Sequence[IntervalBound]]]) -> "SelectionSet":
        return cls([IntervalUnion.from_json(c) for c in data])

    def to_json(self) -> List[List[List[Optional[float]]]]:
        return [c.to_json() for c in self.components]

    @property
    def q(self) -> int:
        return len(self.components)

    def __len__(self) -> int:
        return self.q

    @property
    def is_full(self) -> bool:
        return self._is_full

    def component(self, i: int) -> IntervalUnion:
        return self.components[i]

    def subset(self, indices: Sequence[int]) -> "SelectionSet":
        return SelectionSet([self.components[int(i)] for i in indices])

    def concat(self, other: "SelectionSet") -> "SelectionSet":
        return SelectionSet(self.components + other.components)

    def contains(self, x: Any) -> np.ndarray:
        """Componentwise membership of points of shape (..., q), reduced over components"""
        x = np.asarray(x, dtype=float)
        if x.shape[-1] != self.q:
            raise ParameterDomainError(f"Point dimension {x.shape[-1]} != selection dimension {self.q}")
        inside = (x[..., None] >= self.lows) & (x[..., None] <= self.highs) & self.valid
        return np.all(np.any(inside, axis=-1), axis=-1)

    def project(self, x: Any) -> np.ndarray:
        return nearest_point(self.lows, self.highs, self.valid, x)

    def log_masses(self, mean: Any, std: Any, indices: Optional[Sequence[int]] = None) -> np.ndarray:
        """Per-component log P(A_i) under independent N(mean_i, std_i^2)"""
        if indices is None:
            return log_union_mass(self.lows, self.highs, self.valid, mean, std)
        idx = np.asarray(indices, dtype=int)
        return log_union_mass(self.lows[idx], self.highs[idx], self.valid[idx], mean, std)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SelectionSet):
            return NotImplemented
        return self.components == other.components

    def __hash__(self) -> int:
        return hash(self.components)

    def __repr__(self) -> str:
        distinct = set(self.components)
        if len(distinct) == 1:
            return f"SelectionSet({self.components[0]!r} x {self.q})"
        return f"SelectionSet(q={self.q}, {len(distinct)} distinct components)"
