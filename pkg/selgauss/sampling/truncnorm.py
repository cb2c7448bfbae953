"""
Univariate Gaussian arithmetic on finite unions of intervals

Masses and inverse-CDF draws are computed in log space with survival-function
arithmetic in the upper tail, so bounds far out in either tail stay accurate.
All functions broadcast over leading axes; the last axis of the bound arrays
indexes the intervals of one union. Padding intervals are marked invalid.
"""
import math
from typing import Tuple

import numpy as np
from scipy.special import log_ndtr, logsumexp, ndtr, ndtri_exp

LOG_SQRT_2PI = 0.5 * float(np.log(2.0 * np.pi))


def log1mexp(x: np.ndarray) -> np.ndarray:
    """log(1 - exp(x)) for x <= 0"""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(x > -np.log(2.0), np.log(-np.expm1(x)), np.log1p(-np.exp(x)))


def log_interval_mass(alpha: np.ndarray, beta: np.ndarray) -> np.ndarray:
    """log(Phi(beta) - Phi(alpha)) for standardized bounds alpha <= beta"""
    alpha, beta = np.broadcast_arrays(np.asarray(alpha, dtype=float), np.asarray(beta, dtype=float))
    with np.errstate(divide="ignore", invalid="ignore"):
        # upper tail: difference of survival functions
        log_sf_a = log_ndtr(-alpha)
        log_sf_b = log_ndtr(-beta)
        upper = log_sf_a + log1mexp(log_sf_b - log_sf_a)
        # lower tail: difference of distribution functions
        log_cdf_a = log_ndtr(alpha)
        log_cdf_b = log_ndtr(beta)
        lower = log_cdf_b + log1mexp(log_cdf_a - log_cdf_b)
        # straddling zero: one minus both tails, exactly 0 for the whole line
        middle = np.log1p(-(np.exp(log_cdf_a) + np.exp(log_sf_b)))
    out = np.where(alpha > 0, upper, np.where(beta < 0, lower, middle))
    out = np.where(beta <= alpha, -np.inf, out)
    return np.where(np.isnan(out), -np.inf, out)


def standardize(
    lows: np.ndarray,
    highs: np.ndarray,
    mean: np.ndarray,
    std: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray]:
    mean = np.asarray(mean, dtype=float)[..., None]
    std = np.asarray(std, dtype=float)[..., None]
    with np.errstate(divide="ignore", invalid="ignore"):
        return (lows - mean) / std, (highs - mean) / std


def log_union_mass(
    lows: np.ndarray,
    highs: np.ndarray,
    valid: np.ndarray,
    mean: np.ndarray,
    std: np.ndarray,
) -> np.ndarray:
    """
    log P(X in union) for X ~ N(mean, std^2)

    A zero std is treated as a point mass at the mean.
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    alpha, beta = standardize(lows, highs, mean, std)
    per_interval = np.where(valid, log_interval_mass(alpha, beta), -np.inf)
    with np.errstate(divide="ignore"):
        total = logsumexp(per_interval, axis=-1)
    if np.any(std <= 0):
        m = mean[..., None]
        inside = np.any(valid & (m >= lows) & (m <= highs), axis=-1)
        total = np.where(std <= 0, np.where(inside, 0.0, -np.inf), total)
    return total


def truncated_mean(lo: float, hi: float, mean: float, std: float) -> float:
    """E[X | lo <= X <= hi] for X ~ N(mean, std^2)"""
    alpha = (lo - mean) / std
    beta = (hi - mean) / std
    log_mass = float(log_interval_mass(alpha, beta))
    if not np.isfinite(log_mass):
        return float(np.clip(mean, lo, hi))
    with np.errstate(over="ignore"):
        pdf_a = np.exp(-0.5 * alpha * alpha - LOG_SQRT_2PI - log_mass) if np.isfinite(alpha) else 0.0
        pdf_b = np.exp(-0.5 * beta * beta - LOG_SQRT_2PI - log_mass) if np.isfinite(beta) else 0.0
    return float(np.clip(mean + std * (pdf_a - pdf_b), lo, hi))


def sample_union(
    lows: np.ndarray,
    highs: np.ndarray,
    valid: np.ndarray,
    mean: np.ndarray,
    std: np.ndarray,
    u_pick: np.ndarray,
    u_within: np.ndarray,
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Inverse-CDF draw from N(mean, std^2) restricted to a union of intervals

    Args:
        lows, highs, valid: Interval bounds of shape (..., K)
        mean, std: Gaussian parameters, broadcastable leading shape
        u_pick: Uniforms selecting the interval
        u_within: Uniforms for the inverse CDF inside the chosen interval

    Returns:
        (draw, log_mass, underflow) where log_mass is log P(union) and
        underflow marks draws replaced by the nearest interval point because
        the union mass underflowed
    """
    mean = np.asarray(mean, dtype=float)
    std = np.asarray(std, dtype=float)
    shape = np.broadcast_shapes(mean.shape, std.shape, np.shape(u_pick), np.shape(u_within))
    mean = np.broadcast_to(mean, shape)
    std = np.broadcast_to(std, shape)
    lows = np.broadcast_to(lows, shape + lows.shape[-1:])
    highs = np.broadcast_to(highs, shape + highs.shape[-1:])
    valid = np.broadcast_to(valid, shape + valid.shape[-1:])

    alpha, beta = standardize(lows, highs, mean, std)
    per_interval = np.where(valid, log_interval_mass(alpha, beta), -np.inf)
    with np.errstate(divide="ignore", invalid="ignore"):
        total = logsumexp(per_interval, axis=-1)
        probs = np.exp(per_interval - total[..., None])
    underflow = ~np.isfinite(total)

    cumulative = np.cumsum(np.where(np.isfinite(probs), probs, 0.0), axis=-1)
    pick = np.sum(np.asarray(u_pick)[..., None] >= cumulative, axis=-1)
    pick = np.minimum(pick, lows.shape[-1] - 1)
    chosen_mass = np.take_along_axis(per_interval, pick[..., None], axis=-1)[..., 0]
    best = np.argmax(per_interval, axis=-1)
    pick = np.where(np.isfinite(chosen_mass), pick, best)

    a = np.take_along_axis(alpha, pick[..., None], axis=-1)[..., 0]
    b = np.take_along_axis(beta, pick[..., None], axis=-1)[..., 0]
    lo = np.take_along_axis(lows, pick[..., None], axis=-1)[..., 0]
    hi = np.take_along_axis(highs, pick[..., None], axis=-1)[..., 0]

    v = np.asarray(u_within, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_v = np.log(v)
        log_1mv = np.log1p(-v)
        # mix the two bound tail masses: p = (1 - v) * T(a) + v * T(b)
        log_p_upper = np.logaddexp(log_1mv + log_ndtr(-a), log_v + log_ndtr(-b))
        log_p_lower = np.logaddexp(log_1mv + log_ndtr(a), log_v + log_ndtr(b))
        z = np.where(a > 0, -ndtri_exp(log_p_upper), ndtri_exp(log_p_lower))
        draw = mean + std * z

    fallback = nearest_point(lows, highs, valid, mean)
    point_mass = std <= 0
    draw = np.where(underflow | point_mass | ~np.isfinite(draw), fallback, np.clip(draw, lo, hi))

    log_mass = total
    if np.any(point_mass):
        inside = np.any(valid & (mean[..., None] >= lows) & (mean[..., None] <= highs), axis=-1)
        log_mass = np.where(point_mass, np.where(inside, 0.0, -np.inf), total)
        underflow = underflow & ~point_mass
    return draw, log_mass, underflow


def nearest_point(
    lows: np.ndarray,
    highs: np.ndarray,
    valid: np.ndarray,
    x: np.ndarray,
) -> np.ndarray:
    """Closest point of the union to x"""
    x = np.asarray(x, dtype=float)[..., None]
    clipped = np.clip(x, lows, highs)
    distance = np.where(valid, np.abs(clipped - x), np.inf)
    best = np.argmin(distance, axis=-1)
    return np.take_along_axis(clipped, best[..., None], axis=-1)[..., 0]


def _log1mexp_scalar(x: float) -> float:
    if not x < 0:
        return -math.inf
    if x > -math.log(2.0):
        return math.log(-math.expm1(x))
    return math.log1p(-math.exp(x))


def _log_interval_mass_scalar(alpha: float, beta: float) -> float:
    if not beta > alpha:
        return -math.inf
    if alpha > 0:
        log_sf_a = float(log_ndtr(-alpha))
        return log_sf_a + _log1mexp_scalar(float(log_ndtr(-beta)) - log_sf_a)
    if beta < 0:
        log_cdf_b = float(log_ndtr(beta))
        return log_cdf_b + _log1mexp_scalar(float(log_ndtr(alpha)) - log_cdf_b)
    tails = float(ndtr(alpha)) + float(ndtr(-beta))
    return math.log1p(-tails) if tails < 1.0 else -math.inf


def sample_union_scalar(
    lows: np.ndarray,
    highs: np.ndarray,
    mean: float,
    std: float,
    u_pick: float,
    u_within: float,
) -> Tuple[float, float, bool]:
    """
    Single-draw version of sample_union for one unpadded union

    Same arithmetic without array overhead; used in the sequential block
    proposals where components cannot be vectorized.
    """
    if std <= 0:
        inside = any(lo <= mean <= hi for lo, hi in zip(lows, highs))
        if inside:
            return float(mean), 0.0, False
        return float(nearest_point(lows, highs, np.ones(len(lows), bool), mean)), -math.inf, False

    bounds = [((lo - mean) / std, (hi - mean) / std) for lo, hi in zip(lows, highs)]
    masses = [_log_interval_mass_scalar(a, b) for a, b in bounds]
    top = max(masses)
    if top == -math.inf:
        return float(nearest_point(lows, highs, np.ones(len(lows), bool), mean)), -math.inf, True

    weights = [math.exp(m - top) for m in masses]
    total = sum(weights)
    log_total = top + math.log(total)
    target = u_pick * total
    pick = len(weights) - 1
    running = 0.0
    for k, w in enumerate(weights):
        running += w
        if target < running and w > 0:
            pick = k
            break
    if weights[pick] == 0:
        pick = int(np.argmax(weights))

    a, b = bounds[pick]
    log_v = math.log(u_within) if u_within > 0 else -math.inf
    log_1mv = math.log1p(-u_within)
    if a > 0:
        log_p = np.logaddexp(log_1mv + float(log_ndtr(-a)), log_v + float(log_ndtr(-b)))
        z = -float(ndtri_exp(log_p))
    else:
        log_p = np.logaddexp(log_1mv + float(log_ndtr(a)), log_v + float(log_ndtr(b)))
        z = float(ndtri_exp(log_p))
    draw = mean + std * z
    if not math.isfinite(draw):
        draw = float(nearest_point(lows, highs, np.ones(len(lows), bool), mean))
    return min(max(draw, float(lows[pick])), float(highs[pick])), log_total, False
