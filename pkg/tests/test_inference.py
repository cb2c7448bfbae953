import numpy as np
import pytest

from selgauss.config import DEFAULT_BOUNDS, InferenceConfig
from selgauss.core.gaussian import CorrelationSpec, GridSpec, build_correlation_matrix
from selgauss.errors import ParameterDomainError
from selgauss.inference.mle import (
    fit_gaussian_mle,
    fit_mle,
    gaussian_profile,
    log_likelihood,
    multistart_maximize,
)
from selgauss.inference.parameters import ParameterSpace, StationaryParams, selection_union
from selgauss.models.selection import expand_stationary, log_selection_density
from selgauss.sampling.mvn_prob import ProbEstimator

GRID = GridSpec((6, 6))


@pytest.fixture
def training_image():
    spec = StationaryParams(mu=0.0, sigma2=1.0, d=2.0, gamma=0.8, a=0.3).to_spec(GRID)
    return expand_stationary(spec).simulate(1, seed=17).samples[0]


class TestParameterSpace:
    def test_transforms_invert(self):
        space = ParameterSpace(DEFAULT_BOUNDS)
        theta = StationaryParams(mu=0.3, sigma2=1.7, d=2.5, gamma=0.6, a=0.4)
        back = space.from_unconstrained(space.to_unconstrained(theta))
        assert back.as_tuple() == pytest.approx(theta.as_tuple())

    def test_back_transform_is_clipped_to_bounds(self):
        space = ParameterSpace(DEFAULT_BOUNDS)
        theta = space.from_unconstrained([50.0, 50.0, 50.0, 50.0, 50.0])
        assert theta.gamma == DEFAULT_BOUNDS["gamma"][1]
        assert theta.mu == DEFAULT_BOUNDS["mu"][1]
        assert space.within_bounds(theta)

    def test_fixed_parameters_leave_the_vector(self):
        space = ParameterSpace(DEFAULT_BOUNDS, fixed={"mu": 0.0, "sigma2": 1.0})
        assert space.free == ["d", "gamma", "a"]
        theta = space.from_unconstrained(space.to_unconstrained(StationaryParams(0.0, 1.0, 2.0, 0.5, 0.2)))
        assert theta.mu == 0.0 and theta.sigma2 == 1.0

    def test_unknown_fixed_parameter(self):
        with pytest.raises(ParameterDomainError):
            ParameterSpace(DEFAULT_BOUNDS, fixed={"nugget": 0.1})

    def test_latin_hypercube_starts(self):
        space = ParameterSpace(DEFAULT_BOUNDS)
        starts = space.latin_hypercube_starts(7, seed=3)
        assert len(starts) == 7
        assert all(space.within_bounds(s) for s in starts)
        assert starts == space.latin_hypercube_starts(7, seed=3)
        gammas = sorted(s.gamma for s in starts)
        # one start per stratum
        assert all(k / 7 <= (g - 0.0) / 0.99 < (k + 1) / 7 for k, g in enumerate(gammas))

    def test_selection_families(self):
        assert selection_union("symmetric_two_sided", 0.3).n_intervals == 2
        assert selection_union("one_sided", 0.3).n_intervals == 1
        with pytest.raises(ParameterDomainError):
            selection_union("interval", 0.3)


class TestLikelihood:
    def test_gamma_zero_is_gaussian(self, training_image):
        theta = StationaryParams(mu=0.1, sigma2=1.3, d=2.0, gamma=0.0, a=0.3)
        corr = build_correlation_matrix(GRID, CorrelationSpec("second_order_exponential", (2.0,)))
        _, _, profile = gaussian_profile(training_image - 0.1, corr, design=np.zeros((36, 1)))
        value = log_likelihood(theta, training_image, GRID, ProbEstimator(seed=0))
        # direct Gaussian log density at sigma2 = 1.3
        factor = np.linalg.cholesky(1.3 * corr)
        z = np.linalg.solve(factor, training_image - 0.1)
        expected = -0.5 * (36 * np.log(2 * np.pi) + z @ z) - np.sum(np.log(np.diag(factor)))
        assert value == pytest.approx(expected, rel=1e-8)
        assert profile >= expected - 1e-8

    def test_frozen_estimator_makes_the_surface_deterministic(self, training_image):
        theta = StationaryParams(mu=0.0, sigma2=1.0, d=2.0, gamma=0.8, a=0.3)
        first = log_likelihood(theta, training_image, GRID, ProbEstimator(n_samples=300, seed=4))
        second = log_likelihood(theta, training_image, GRID, ProbEstimator(n_samples=300, seed=4))
        assert np.isfinite(first)
        assert first == second

    @pytest.mark.slow
    def test_frozen_surface_is_smooth_in_gamma(self, training_image):
        estimator = ProbEstimator(n_samples=500, seed=6)
        values, errors = [], []
        for gamma in np.linspace(0.70, 0.80, 11):
            theta = StationaryParams(mu=0.0, sigma2=1.0, d=2.0, gamma=float(gamma), a=0.3)
            value, error = log_selection_density(expand_stationary(theta.to_spec(GRID)), training_image, estimator)
            assert value == pytest.approx(log_likelihood(theta, training_image, GRID, estimator))
            values.append(value)
            errors.append(error)
        assert np.all(np.isfinite(values))
        # no jumps on the scale of the Monte Carlo error
        assert np.max(np.abs(np.diff(values, n=2))) < min(errors)

    def test_size_mismatch(self, training_image):
        theta = StationaryParams(mu=0.0, sigma2=1.0, d=2.0, gamma=0.8, a=0.3)
        with pytest.raises(ParameterDomainError):
            log_likelihood(theta, training_image[:10], GRID, ProbEstimator(seed=0))


class TestOptimizer:
    def test_multistart_finds_the_maximum(self):
        outcome = multistart_maximize(
            lambda x: -float(np.sum((x - 1.5) ** 2)),
            [np.zeros(2), np.full(2, 3.0)],
            None,
            1e-8,
            2000,
        )
        assert outcome.x == pytest.approx([1.5, 1.5], abs=1e-3)
        assert outcome.converged
        assert len(outcome.restart_values) == 2

    def test_non_finite_objective_is_penalized(self):
        outcome = multistart_maximize(
            lambda x: -np.inf if x[0] < 0 else -float((x[0] - 1.0) ** 2),
            [np.array([0.5])],
            [(-2.0, 3.0)],
            1e-8,
            500,
        )
        assert outcome.x[0] == pytest.approx(1.0, abs=1e-3)


class TestFits:
    def test_gaussian_fit(self, training_image):
        fit = fit_gaussian_mle(training_image, GRID)
        assert fit.theta_hat.gamma == 0.0
        assert DEFAULT_BOUNDS["d"][0] <= fit.theta_hat.d <= DEFAULT_BOUNDS["d"][1]
        assert fit.theta_hat.mu == pytest.approx(
            gaussian_profile(
                training_image,
                build_correlation_matrix(GRID, CorrelationSpec("second_order_exponential", (fit.theta_hat.d,))),
            )[0][0]
        )

    def test_selection_fit_with_gamma_fixed_at_zero_matches_gaussian(self, training_image):
        gaussian = fit_gaussian_mle(training_image, GRID, tol=1e-8)
        config = InferenceConfig(
            n_mc=100,
            n_restarts=3,
            optimizer_tol=1e-8,
            fixed={"gamma": 0.0, "a": 0.3},
        )
        fit = fit_mle(training_image, GRID, config)
        assert fit.log_lik == pytest.approx(gaussian.log_lik, abs=1e-3)
        assert fit.theta_hat.d == pytest.approx(gaussian.theta_hat.d, rel=1e-2)
        assert fit.theta_hat.sigma2 == pytest.approx(gaussian.theta_hat.sigma2, rel=1e-2)

    def test_fit_is_reproducible(self, training_image):
        config = InferenceConfig(n_mc=200, n_restarts=2, max_iter=150, fixed={"mu": 0.0, "sigma2": 1.0})
        first = fit_mle(training_image, GRID, config)
        second = fit_mle(training_image, GRID, config)
        assert first.theta_hat == second.theta_hat
        assert first.restart_values == second.restart_values
        assert len(first.restart_estimates) == 2
        assert first.to_dict()["restart_spread"] >= 0.0

    def test_all_parameters_fixed(self, training_image):
        config = InferenceConfig(n_mc=100, fixed={"mu": 0.0, "sigma2": 1.0, "d": 2.0, "gamma": 0.8, "a": 0.3})
        fit = fit_mle(training_image, GRID, config)
        assert fit.theta_hat.as_tuple() == (0.0, 1.0, 2.0, 0.8, 0.3)
        assert fit.n_evaluations == 1
