import numpy as np
import pytest
from scipy import stats

from selgauss.config import MapSearchConfig, SamplerConfig
from selgauss.core.gaussian import CorrelationSpec, GaussianParams, GridSpec, condition_gaussian
from selgauss.errors import ParameterDomainError
from selgauss.inversion.likelihood import GaussLinearLikelihood
from selgauss.inversion.posterior import joint_gaussian, log_data_marginal, posterior_model, simulate_posterior
from selgauss.inversion.prediction import (
    gaussian_predictions,
    map_predict,
    marginal_posterior_density,
    predict,
    predict_all,
    prior_predictions,
    sample_predictions,
)
from selgauss.models.selection import SelectionGaussianModel, StationaryPriorSpec, expand_stationary
from selgauss.models.selection_sets import IntervalUnion, SelectionSet
from selgauss.sampling.mvn_prob import ProbEstimator


@pytest.fixture
def noisy_likelihood(rng):
    H = rng.standard_normal((3, 12)) / 3.0
    return GaussLinearLikelihood(H, 0.1 * np.eye(3))


def _gaussian_version(model: SelectionGaussianModel) -> SelectionGaussianModel:
    data = model.to_dict()
    data["gamma_nu_r"] = np.zeros((model.q, model.n)).tolist()
    return SelectionGaussianModel.from_dict(data)


class TestLikelihood:
    def test_exact_point_observations(self):
        lik = GaussLinearLikelihood.exact(5, [1, 3])
        assert lik.H.tolist() == [[0, 1, 0, 0, 0], [0, 0, 0, 1, 0]]
        assert np.allclose(lik.sigma_d_r, 1e-10 * np.eye(2))

    def test_index_out_of_range(self):
        with pytest.raises(ParameterDomainError):
            GaussLinearLikelihood.exact(5, [5])

    def test_noise_shape_must_match(self):
        with pytest.raises(ParameterDomainError):
            GaussLinearLikelihood(np.eye(3), np.eye(2))


class TestPosterior:
    def test_gaussian_prior_gives_kriging(self, bimodal_model, noisy_likelihood):
        prior = _gaussian_version(bimodal_model)
        d = np.array([0.3, -0.2, 1.0])
        post = posterior_model(prior, noisy_likelihood, d)
        joint = GaussianParams(
            np.concatenate([prior.mu_r, noisy_likelihood.H @ prior.mu_r]),
            np.block([
                [prior.sigma_r, prior.sigma_r @ noisy_likelihood.H.T],
                [noisy_likelihood.H @ prior.sigma_r,
                 noisy_likelihood.H @ prior.sigma_r @ noisy_likelihood.H.T + noisy_likelihood.sigma_d_r],
            ]),
        )
        kriging = condition_gaussian(joint, np.arange(12, 15), d)
        assert post.is_gaussian
        assert np.allclose(post.mu_r_d, kriging.mean)
        assert np.allclose(post.sigma_r_d, kriging.cov, atol=1e-10)

    def test_matches_conditioning_of_the_joint(self, bimodal_model, noisy_likelihood):
        d = np.array([0.5, 0.0, -0.7])
        post = posterior_model(bimodal_model, noisy_likelihood, d)
        n, q = bimodal_model.n, bimodal_model.q
        cond = condition_gaussian(joint_gaussian(bimodal_model, noisy_likelihood), np.arange(n + q, n + q + 3), d)
        assert np.allclose(post.mu_r_d, cond.mean[:n])
        assert np.allclose(post.mu_nu_d, cond.mean[n:])
        assert np.allclose(post.sigma_r_d, cond.cov[:n, :n], atol=1e-10)
        assert np.allclose(post.sigma_nu_d, cond.cov[n:, n:], atol=1e-10)
        assert np.allclose(post.gamma_r_nu_d, cond.cov[:n, n:], atol=1e-10)

    def test_keeps_coupling_and_selection(self, bimodal_model, noisy_likelihood):
        post = posterior_model(bimodal_model, noisy_likelihood, np.zeros(3))
        assert np.array_equal(post.model.gamma_nu_r, bimodal_model.gamma_nu_r)
        assert np.array_equal(post.model.sigma_nu_r, bimodal_model.sigma_nu_r)
        assert post.model.selection == bimodal_model.selection

    def test_sequential_conditioning_equals_joint(self, bimodal_model):
        lik = GaussLinearLikelihood.exact(12, [2, 9], eps=1e-4)
        d = np.array([1.2, -0.8])
        both = posterior_model(bimodal_model, lik, d)
        first = posterior_model(bimodal_model, GaussLinearLikelihood.exact(12, [2], eps=1e-4), d[:1]).model
        second = posterior_model(first, GaussLinearLikelihood.exact(12, [9], eps=1e-4), d[1:])
        assert np.allclose(both.mu_r_d, second.mu_r_d, atol=1e-8)
        assert np.allclose(both.mu_nu_d, second.mu_nu_d, atol=1e-8)
        assert np.allclose(both.sigma_r_d, second.sigma_r_d, atol=1e-8)

    def test_observation_order_does_not_matter(self, bimodal_model, noisy_likelihood):
        d = np.array([0.5, 0.0, -0.7])
        post = posterior_model(bimodal_model, noisy_likelihood, d)
        swapped = posterior_model(bimodal_model, noisy_likelihood.permuted(), d[::-1])
        assert np.allclose(post.mu_r_d, swapped.mu_r_d)
        assert np.allclose(post.sigma_r_d, swapped.sigma_r_d, atol=1e-12)

    def test_exact_observations_are_honored(self, bimodal_model, fast_sampler):
        lik = GaussLinearLikelihood.exact(12, [2, 9])
        d = np.array([1.5, -1.5])
        realizations = simulate_posterior(posterior_model(bimodal_model, lik, d), 40, fast_sampler, seed=6)
        assert np.max(np.abs(realizations.samples[:, [2, 9]] - d)) < 1e-3

    def test_data_dimension(self, bimodal_model, noisy_likelihood):
        with pytest.raises(ParameterDomainError):
            posterior_model(bimodal_model, noisy_likelihood, np.zeros(2))


class TestEvidence:
    def test_gaussian_prior_evidence(self, bimodal_model, noisy_likelihood):
        prior = _gaussian_version(bimodal_model)
        d = np.array([0.1, 0.2, -0.3])
        H = noisy_likelihood.H
        expected = stats.multivariate_normal(H @ prior.mu_r, H @ prior.sigma_r @ H.T + noisy_likelihood.sigma_d_r).logpdf(d)
        value, error = log_data_marginal(prior, noisy_likelihood, d)
        assert value == pytest.approx(expected)
        assert error == 0.0

    def test_scalar_evidence_closed_form(self):
        gamma, a, noise = 0.8, 0.5, 0.25
        prior = SelectionGaussianModel(
            mu_r=[0.0], sigma_r=[[1.0]], mu_nu=[0.0], gamma_nu_r=[[gamma]],
            sigma_nu_r=[[1.0 - gamma ** 2]], selection=SelectionSet([IntervalUnion.symmetric_two_sided(a)]),
        )
        lik = GaussLinearLikelihood(np.eye(1), noise * np.eye(1))
        d = np.array([0.9])
        value, _ = log_data_marginal(prior, lik, d, ProbEstimator(seed=0))

        # nu | d ~ N(gamma k d, gamma^2 k noise + 1 - gamma^2) with k = 1 / (1 + noise)
        k = 1.0 / (1.0 + noise)
        mean = gamma * k * d[0]
        sd = np.sqrt(gamma ** 2 * k * noise + 1.0 - gamma ** 2)
        numerator = stats.norm.cdf((-a - mean) / sd) + stats.norm.sf((a - mean) / sd)
        expected = np.log(numerator) - np.log(2.0 * stats.norm.sf(a)) + stats.norm.logpdf(d[0], scale=np.sqrt(1.0 + noise))
        assert value == pytest.approx(expected, rel=1e-10)


class TestPrediction:
    def test_gaussian_predictors_coincide(self, bimodal_model, noisy_likelihood):
        post = posterior_model(_gaussian_version(bimodal_model), noisy_likelihood, np.array([0.1, 0.2, 0.3]))
        predictions = predict_all(post, 0.2)
        assert np.array_equal(predictions.expectation, predictions.median)
        assert np.array_equal(predictions.expectation, predictions.map)
        z = stats.norm.ppf(0.9)
        std = np.sqrt(np.diag(post.sigma_r_d))
        assert np.allclose(predictions.upper - predictions.lower, 2.0 * z * std)

    def test_sample_predictions(self):
        samples = np.arange(101, dtype=float)[:, None] * np.ones((1, 2))
        predictions = sample_predictions(samples, 0.2, np.zeros(2))
        assert predictions.expectation.tolist() == [50.0, 50.0]
        assert predictions.lower.tolist() == pytest.approx([10.0, 10.0])
        assert predictions.upper.tolist() == pytest.approx([90.0, 90.0])
        assert predictions.coverage(np.array([5.0, 50.0])) == 0.5

    def test_bimodal_posterior_predictions(self, bimodal_model, fast_sampler):
        lik = GaussLinearLikelihood.exact(12, [2, 9])
        post = posterior_model(bimodal_model, lik, np.array([1.5, -1.5]))
        config = MapSearchConfig(n_grid=41, n_mc=200)
        predictions = predict_all(post, 0.2, 100, seed=1, sampler_config=fast_sampler, map_config=config)
        assert predictions.n_realizations == 100
        assert np.all(predictions.lower <= predictions.upper)
        assert predictions.map[2] == pytest.approx(1.5, abs=1e-3)
        assert predictions.map[9] == pytest.approx(-1.5, abs=1e-3)
        assert np.all(np.isfinite(predictions.map))

    def test_map_of_a_few_nodes(self, bimodal_model):
        post = posterior_model(bimodal_model, GaussLinearLikelihood.exact(12, [0]), np.array([2.0]))
        values, fallbacks = map_predict(post, MapSearchConfig(n_grid=41, n_mc=200), nodes=[1, 11])
        assert values[1] > 0.5
        assert values[5] == post.mu_r_d[5]
        assert set(fallbacks) <= {1, 11}

    def test_prior_predictions_of_gaussian_model(self, bimodal_model):
        predictions = prior_predictions(_gaussian_version(bimodal_model), 0.1)
        assert np.allclose(predictions.upper, stats.norm.ppf(0.95))

    def test_rejects_unknown_criterion(self, bimodal_model, noisy_likelihood):
        post = posterior_model(bimodal_model, noisy_likelihood, np.zeros(3))
        with pytest.raises(ParameterDomainError):
            predict(post, "MODE")

    def test_rejects_bad_alpha(self):
        with pytest.raises(ParameterDomainError):
            predict_all(None, 1.5)

    def test_closed_form_predictions(self):
        predictions = gaussian_predictions(np.zeros(2), np.ones(2), 0.2)
        assert predictions.upper.tolist() == pytest.approx([stats.norm.ppf(0.9)] * 2)

    def test_marginal_curve_of_a_gaussian_posterior(self, bimodal_model, noisy_likelihood):
        post = posterior_model(_gaussian_version(bimodal_model), noisy_likelihood, np.array([0.4, -0.1, 0.2]))
        values = np.linspace(-2.0, 2.0, 9)
        density, error = marginal_posterior_density(post, 5, values)
        expected = stats.norm.pdf(values, post.mu_r_d[5], np.sqrt(post.sigma_r_d[5, 5]))
        assert np.allclose(density, expected)
        assert not error.any()


class TestPredictorBehaviour:
    @pytest.mark.slow
    def test_intervals_are_calibrated_over_repeated_truths(self, bimodal_model, fast_sampler, rng):
        truths = bimodal_model.simulate(25, SamplerConfig(block_size=12, n_burnin=200, n_thin=20), seed=30).samples
        H = np.zeros((3, 12))
        H[[0, 1, 2], [1, 5, 10]] = 1.0
        lik = GaussLinearLikelihood(H, 0.25 * np.eye(3))
        coverages = []
        for k, truth in enumerate(truths):
            d = H @ truth + 0.5 * rng.standard_normal(3)
            predictions = predict_all(
                posterior_model(bimodal_model, lik, d), 0.2, 300, seed=k, sampler_config=fast_sampler, with_map=False
            )
            coverages.append(predictions.coverage(truth))
        assert np.mean(coverages) == pytest.approx(0.8, abs=0.1)

    @pytest.mark.slow
    def test_predictors_coincide_under_dense_precise_data(self, bimodal_model, fast_sampler):
        truth = bimodal_model.simulate(1, fast_sampler, seed=3).samples[0]
        post = posterior_model(bimodal_model, GaussLinearLikelihood(np.eye(12), 1e-4 * np.eye(12)), truth)
        predictions = predict_all(
            post, 0.2, 400, seed=1, sampler_config=fast_sampler, map_config=MapSearchConfig(n_grid=61, n_mc=200)
        )
        assert np.allclose(predictions.expectation, truth, atol=0.03)
        assert np.allclose(predictions.median, predictions.expectation, atol=0.02)
        assert np.allclose(predictions.map, predictions.expectation, atol=0.02)

    @pytest.mark.slow
    def test_map_is_stepwise_between_opposite_observations(self):
        spec = StationaryPriorSpec(
            mu=0.0,
            sigma2=1.0,
            gamma=0.9,
            corr=CorrelationSpec("second_order_exponential", (4.0,)),
            grid=GridSpec((40,)),
            a_set=IntervalUnion.symmetric_two_sided(0.4),
        )
        post = posterior_model(expand_stationary(spec), GaussLinearLikelihood.exact(40, [5, 34]), np.array([2.5, -2.5]))
        middle = list(range(15, 25))
        map_values, _ = map_predict(post, MapSearchConfig(n_grid=81, n_mc=500), nodes=middle)
        steps = np.sort(map_values[middle])
        levels = 1 + int(np.sum(np.diff(steps) > 0.1))
        assert levels <= 3
        # the MAP jumps between the modes while the basis mean passes through zero
        assert np.min(np.abs(map_values[middle])) > 0.3
        assert np.min(np.abs(post.mu_r_d[middle])) < 0.3
