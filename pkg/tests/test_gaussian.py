import logging

import numpy as np
import pytest
from scipy import integrate, stats

from selgauss.core.gaussian import (
    CorrelationSpec,
    GaussianParams,
    GridSpec,
    build_correlation_matrix,
    cholesky_factor,
    condition_gaussian,
    derive_seed,
    log_gaussian_pdf,
)
from selgauss.errors import LinearAlgebraError, ParameterDomainError


class TestGrid:
    def test_first_axis_varies_fastest(self):
        grid = GridSpec((3, 2))
        coords = grid.coordinates()
        assert grid.n_nodes == 6
        assert coords[1].tolist() == [1.0, 0.0]
        assert coords[3].tolist() == [0.0, 1.0]
        assert grid.node_index((1, 0)) == 1
        assert grid.node_index((0, 1)) == 3
        assert grid.position(5) == (2, 1)

    @pytest.mark.parametrize("dims", [(), (2, 2, 2, 2), (4, 0)])
    def test_rejects_bad_dimensions(self, dims):
        with pytest.raises(ParameterDomainError):
            GridSpec(dims)


class TestCorrelation:
    def test_second_order_exponential(self):
        corr = build_correlation_matrix(GridSpec((3,)), CorrelationSpec("second_order_exponential", (2.0,)))
        assert corr[0, 1] == pytest.approx(np.exp(-0.25))
        assert corr[0, 2] == pytest.approx(np.exp(-1.0))
        assert np.allclose(np.diag(corr), 1.0)

    def test_exponential(self):
        corr = build_correlation_matrix(GridSpec((3,)), CorrelationSpec("exponential", (2.0,)))
        assert corr[0, 1] == pytest.approx(np.exp(-0.5))
        assert corr[0, 2] == pytest.approx(np.exp(-1.0))

    def test_anisotropic_ranges(self):
        corr = build_correlation_matrix(GridSpec((2, 2)), CorrelationSpec("second_order_exponential", (2.0, 0.5)))
        assert corr[0, 1] == pytest.approx(np.exp(-0.25))
        assert corr[0, 2] == pytest.approx(np.exp(-4.0))
        assert corr[0, 3] == pytest.approx(np.exp(-4.25))

    def test_swapping_axes_permutes_nodes(self):
        corr = build_correlation_matrix(GridSpec((3, 4)), CorrelationSpec("second_order_exponential", (2.0, 0.7)))
        swapped_grid = GridSpec((4, 3))
        swapped = build_correlation_matrix(swapped_grid, CorrelationSpec("second_order_exponential", (0.7, 2.0)))
        grid = GridSpec((3, 4))
        perm = [swapped_grid.node_index(tuple(reversed(grid.position(k)))) for k in range(grid.n_nodes)]
        assert np.allclose(corr, swapped[np.ix_(perm, perm)])

    def test_range_count_must_match_axes(self):
        spec = CorrelationSpec("exponential", (1.0, 2.0))
        with pytest.raises(ParameterDomainError):
            build_correlation_matrix(GridSpec((4,)), spec)

    @pytest.mark.parametrize("family, ranges", [("gaussian", (1.0,)), ("exponential", (0.0,)), ("exponential", (-1.0,))])
    def test_rejects_bad_spec(self, family, ranges):
        with pytest.raises(ParameterDomainError):
            CorrelationSpec(family, ranges)


class TestCholesky:
    def test_singular_psd_matrix_gets_jitter(self, caplog):
        cov = np.ones((3, 3))
        with caplog.at_level(logging.WARNING, logger="selgauss"):
            factor = cholesky_factor(cov, label="rank one")
        assert np.allclose(factor @ factor.T, cov, atol=1e-6)
        assert any(r.levelno == logging.WARNING and "rank one" in r.getMessage() for r in caplog.records)

    def test_regular_matrix_logs_nothing(self, caplog):
        with caplog.at_level(logging.WARNING, logger="selgauss"):
            cholesky_factor(np.eye(3))
        assert not caplog.records

    def test_indefinite_matrix_fails(self):
        with pytest.raises(LinearAlgebraError):
            cholesky_factor(np.array([[1.0, 2.0], [2.0, 1.0]]))

    def test_non_finite_matrix_fails(self):
        with pytest.raises(LinearAlgebraError):
            cholesky_factor(np.array([[1.0, np.nan], [np.nan, 1.0]]))


class TestConditioning:
    def test_bivariate_regression(self):
        rho, s1, s2 = 0.6, 2.0, 0.5
        joint = GaussianParams([1.0, -1.0], [[s1 * s1, rho * s1 * s2], [rho * s1 * s2, s2 * s2]])
        cond = condition_gaussian(joint, [1], [0.0])
        assert cond.mean[0] == pytest.approx(1.0 + rho * s1 / s2 * 1.0)
        assert cond.cov[0, 0] == pytest.approx(s1 * s1 * (1.0 - rho ** 2))

    def test_sequential_conditioning_is_projective(self, rng):
        a = rng.standard_normal((5, 5))
        joint = GaussianParams(rng.standard_normal(5), a @ a.T + 0.3 * np.eye(5))
        both = condition_gaussian(joint, [1, 3], [0.4, -1.2])
        # after removing node 1, node 3 sits at position 2
        stepwise = condition_gaussian(condition_gaussian(joint, [1], [0.4]), [2], [-1.2])
        assert np.allclose(both.mean, stepwise.mean)
        assert np.allclose(both.cov, stepwise.cov)
        reversed_order = condition_gaussian(joint, [3, 1], [-1.2, 0.4])
        assert np.allclose(both.mean, reversed_order.mean)

    def test_no_observations_returns_joint(self):
        joint = GaussianParams([0.0, 1.0], np.eye(2))
        assert condition_gaussian(joint, [], []) is joint

    def test_duplicate_indices_rejected(self):
        joint = GaussianParams(np.zeros(3), np.eye(3))
        with pytest.raises(ParameterDomainError):
            condition_gaussian(joint, [0, 0], [1.0, 1.0])

    def test_asymmetric_covariance_rejected(self):
        with pytest.raises(ParameterDomainError):
            GaussianParams([0.0, 0.0], [[1.0, 0.5], [0.4, 1.0]])


def test_log_pdf_matches_scipy(rng):
    a = rng.standard_normal((4, 4))
    cov = a @ a.T + 0.5 * np.eye(4)
    mean = rng.standard_normal(4)
    points = rng.standard_normal((5, 4))
    params = GaussianParams(mean, cov)
    expected = stats.multivariate_normal(mean, cov).logpdf(points)
    assert np.allclose(log_gaussian_pdf(points, params), expected)
    assert log_gaussian_pdf(points[0], params) == pytest.approx(expected[0])


def test_derived_seeds_are_stable_and_distinct():
    assert derive_seed(7, 1, 2) == derive_seed(7, 1, 2)
    children = {derive_seed(7, k) for k in range(20)}
    assert len(children) == 20
    assert derive_seed(7, 0) != derive_seed(8, 0)
    assert all(0 <= s < 2 ** 63 for s in children)


def test_log_pdf_integrates_to_one_in_two_dimensions():
    params = GaussianParams([0.3, -0.2], [[1.0, 0.5], [0.5, 2.0]])
    x = np.linspace(-8.0, 8.5, 241)
    y = np.linspace(-11.5, 11.0, 241)
    xx, yy = np.meshgrid(x, y, indexing="ij")
    points = np.column_stack([xx.ravel(), yy.ravel()])
    density = np.exp(log_gaussian_pdf(points, params)).reshape(xx.shape)
    total = integrate.trapezoid(integrate.trapezoid(density, y, axis=1), x)
    assert total == pytest.approx(1.0, abs=1e-4)
