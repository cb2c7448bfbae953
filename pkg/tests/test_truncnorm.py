import numpy as np
import pytest
from scipy import stats

from selgauss.sampling.truncnorm import (
    log_interval_mass,
    nearest_point,
    sample_union,
    sample_union_scalar,
    truncated_mean,
)


def _bounds(intervals):
    lows = np.array([lo for lo, _ in intervals], dtype=float)
    highs = np.array([hi for _, hi in intervals], dtype=float)
    return lows, highs, np.ones(lows.size, dtype=bool)


@pytest.mark.parametrize("alpha, beta", [(-1.0, 0.5), (2.0, 3.0), (-3.0, -2.0), (-np.inf, np.inf), (-np.inf, -1.0)])
def test_interval_mass_matches_cdf_difference(alpha, beta):
    expected = np.log(stats.norm.cdf(beta) - stats.norm.cdf(alpha))
    assert float(log_interval_mass(alpha, beta)) == pytest.approx(expected, rel=1e-10, abs=1e-14)


def test_interval_mass_deep_in_the_upper_tail():
    value = float(log_interval_mass(30.0, 31.0))
    expected = stats.norm.logsf(30.0) + np.log1p(-np.exp(stats.norm.logsf(31.0) - stats.norm.logsf(30.0)))
    assert value == pytest.approx(expected, rel=1e-10)


def test_empty_interval_has_no_mass():
    assert float(log_interval_mass(1.0, 1.0)) == -np.inf


def test_truncated_mean_of_upper_half():
    assert truncated_mean(0.0, np.inf, 0.0, 1.0) == pytest.approx(np.sqrt(2.0 / np.pi))
    assert truncated_mean(1.0, 2.0, 0.0, 1.0) == pytest.approx(stats.truncnorm(1.0, 2.0).mean())


def test_draws_stay_inside_the_union(rng):
    lows, highs, valid = _bounds([(-np.inf, -0.4), (0.4, np.inf)])
    draw, log_mass, underflow = sample_union(lows, highs, valid, 0.1, 1.0, rng.random(2000), rng.random(2000))
    assert ((draw <= -0.4) | (draw >= 0.4)).all()
    assert not underflow.any()
    assert np.allclose(log_mass, np.log(stats.norm.cdf(-0.5) + stats.norm.sf(0.3)))


def test_draws_follow_the_truncated_law(rng):
    lows, highs, valid = _bounds([(0.5, 2.0)])
    draw, _, _ = sample_union(lows, highs, valid, 0.0, 1.0, rng.random(4000), rng.random(4000))
    result = stats.kstest(draw, stats.truncnorm(0.5, 2.0).cdf)
    assert result.pvalue > 1e-3


def test_point_mass_outside_the_union():
    lows, highs, valid = _bounds([(1.0, 2.0)])
    draw, log_mass, _ = sample_union(lows, highs, valid, 0.0, 0.0, 0.3, 0.7)
    assert float(draw) == 1.0
    assert float(log_mass) == -np.inf


def test_far_tail_draw_is_finite():
    lows, highs, valid = _bounds([(40.0, np.inf)])
    draw, log_mass, underflow = sample_union(lows, highs, valid, 0.0, 1.0, 0.5, 0.5)
    assert 40.0 <= float(draw) < 41.0
    assert np.isfinite(log_mass)
    assert not bool(underflow)


def test_scalar_draw_matches_vectorized():
    lows, highs, valid = _bounds([(-np.inf, -0.3), (0.3, np.inf)])
    for u_pick, u_within in [(0.1, 0.2), (0.6, 0.9), (0.99, 0.01)]:
        vector, vector_mass, _ = sample_union(lows, highs, valid, 0.2, 0.8, u_pick, u_within)
        scalar, scalar_mass, _ = sample_union_scalar(lows, highs, 0.2, 0.8, u_pick, u_within)
        assert scalar == pytest.approx(float(vector), rel=1e-9)
        assert scalar_mass == pytest.approx(float(vector_mass), rel=1e-9)


def test_nearest_point_ignores_padding():
    lows = np.array([0.0, np.inf])
    highs = np.array([1.0, np.inf])
    valid = np.array([True, False])
    assert float(nearest_point(lows, highs, valid, 5.0)) == 1.0
