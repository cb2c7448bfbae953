import numpy as np
import pytest
from scipy import stats

from selgauss.errors import ParameterDomainError
from selgauss.models.selection_sets import IntervalUnion, SelectionSet
from selgauss.sampling.mvn_prob import ProbEstimator, UniformStream, choose_mean_shift, estimate_mvn_prob


def _corr(rho, n):
    return (1.0 - rho) * np.eye(n) + rho * np.ones((n, n))


def test_full_set_has_probability_one():
    estimate = estimate_mvn_prob(np.zeros(3), _corr(0.5, 3), SelectionSet.full(3), seed=1)
    assert estimate.value == 1.0
    assert estimate.std_error == 0.0


def test_diagonal_covariance_is_exact():
    A = SelectionSet([IntervalUnion.one_sided(0.5), IntervalUnion([(None, -0.2), (0.2, None)])])
    estimate = estimate_mvn_prob(np.array([0.0, 1.0]), np.diag([1.0, 4.0]), A, eta="zero", seed=1)
    expected = stats.norm.sf(0.5) * (stats.norm.cdf(-0.6) + stats.norm.sf(-0.4))
    assert estimate.value == pytest.approx(expected, rel=1e-12)
    assert estimate.relative_error == 0.0


def test_orthant_probability():
    A = SelectionSet.replicate(IntervalUnion.one_sided(0.0), 2)
    estimate = estimate_mvn_prob(np.zeros(2), _corr(0.5, 2), A, N=20000, seed=3)
    # P(X1 > 0, X2 > 0) = 1/4 + arcsin(rho) / (2 pi)
    assert abs(estimate.value - 1.0 / 3.0) < 5.0 * estimate.std_error + 1e-3


def test_frozen_stream_is_deterministic():
    A = SelectionSet.replicate(IntervalUnion.symmetric_two_sided(0.3), 4)
    mu = np.array([0.1, -0.2, 0.3, 0.0])
    first = ProbEstimator(n_samples=500, seed=11).estimate(mu, _corr(0.6, 4), A)
    second = ProbEstimator(n_samples=500, seed=11).estimate(mu, _corr(0.6, 4), A)
    other = ProbEstimator(n_samples=500, seed=12).estimate(mu, _corr(0.6, 4), A)
    assert first.log_value == second.log_value
    assert first.log_value != other.log_value


def test_uniform_columns_depend_only_on_seed_and_index():
    stream = UniformStream(seed=5, n_samples=100)
    assert np.array_equal(stream.column(3)[0], UniformStream(seed=5, n_samples=100).column(3)[0])
    assert not np.array_equal(stream.column(3)[0], stream.column(4)[0])


def test_batch_matches_single_estimates():
    A = SelectionSet.replicate(IntervalUnion([(None, -0.4), (0.4, None)]), 3)
    cov = _corr(0.7, 3)
    means = np.array([[0.0, 0.0, 0.0], [0.5, -0.5, 0.2], [1.0, 1.0, 1.0]])
    estimator = ProbEstimator(n_samples=400, seed=2, eta="zero")
    log_values, _ = estimator.log_estimate_batch(means, cov, A)
    singles = [estimator.estimate(m, cov, A).log_value for m in means]
    assert np.allclose(log_values, singles, rtol=1e-12)


def test_mean_shift_moves_into_the_dominant_interval():
    A = SelectionSet([IntervalUnion.one_sided(2.0), IntervalUnion.symmetric_two_sided(0.5)])
    eta = choose_mean_shift(np.zeros(2), np.eye(2), A)
    assert eta[0] == pytest.approx(stats.truncnorm(2.0, np.inf).mean())
    # equal masses on both sides: no shift
    assert eta[1] == 0.0


def test_shifted_and_unshifted_estimates_agree():
    A = SelectionSet.replicate(IntervalUnion.one_sided(1.5), 2)
    cov = _corr(0.3, 2)
    shifted = estimate_mvn_prob(np.zeros(2), cov, A, N=20000, seed=4)
    plain = estimate_mvn_prob(np.zeros(2), cov, A, N=20000, eta="zero", seed=4)
    assert np.any(shifted.mean_shift)
    tolerance = 5.0 * np.hypot(shifted.std_error, plain.std_error)
    assert abs(shifted.value - plain.value) < tolerance


@pytest.mark.parametrize("kwargs", [{"N": 10}, {"eta": "sideways"}, {"eta": [0.0]}])
def test_rejects_bad_arguments(kwargs):
    A = SelectionSet.full(2)
    with pytest.raises(ParameterDomainError):
        estimate_mvn_prob(np.zeros(2), np.eye(2), A, seed=0, **kwargs)


def test_dimension_mismatch():
    with pytest.raises(ParameterDomainError):
        estimate_mvn_prob(np.zeros(3), np.eye(3), SelectionSet.full(2), seed=0)


@pytest.mark.slow
def test_agrees_with_scipy_cdf():
    rng = np.random.default_rng(9)
    a = rng.standard_normal((4, 4))
    cov = a @ a.T + np.eye(4)
    upper = np.array([0.5, 1.0, -0.2, 2.0])
    A = SelectionSet([IntervalUnion([(None, float(b))]) for b in upper])
    estimate = estimate_mvn_prob(np.zeros(4), cov, A, N=50000, seed=9)
    expected = stats.multivariate_normal(np.zeros(4), cov).cdf(upper)
    assert estimate.value == pytest.approx(expected, abs=5.0 * estimate.std_error + 2e-4)


@pytest.mark.slow
def test_unbiased_over_random_problems():
    rng = np.random.default_rng(17)
    errors = []
    for _ in range(8):
        a = rng.standard_normal((3, 3))
        cov = a @ a.T + 0.5 * np.eye(3)
        upper = rng.uniform(-0.5, 1.5, size=3)
        A = SelectionSet([IntervalUnion([(None, float(b))]) for b in upper])
        truth = stats.multivariate_normal(np.zeros(3), cov).cdf(upper)
        values = np.array([estimate_mvn_prob(np.zeros(3), cov, A, N=500, seed=s).value for s in range(30)])
        errors.append((values - truth) / truth)
    errors = np.concatenate(errors)
    assert abs(errors.mean()) < 4.0 * errors.std() / np.sqrt(errors.size) + 1e-3


def test_enlarging_the_set_raises_the_probability():
    cov = _corr(0.6, 3)
    previous = None
    for a in (1.2, 0.8, 0.4, 0.1):
        A = SelectionSet.replicate(IntervalUnion.symmetric_two_sided(a), 3)
        estimate = estimate_mvn_prob(np.zeros(3), cov, A, N=4000, seed=21)
        if previous is not None:
            assert estimate.value > previous.value - 3.0 * np.hypot(estimate.std_error, previous.std_error)
        previous = estimate
    assert previous.value <= 1.0


def test_mean_shift_reduces_the_error_in_the_tail():
    A = SelectionSet.replicate(IntervalUnion.one_sided(3.0), 3)
    cov = _corr(0.5, 3)
    shifted = estimate_mvn_prob(np.zeros(3), cov, A, N=5000, seed=13)
    plain = estimate_mvn_prob(np.zeros(3), cov, A, N=5000, eta="zero", seed=13)
    assert shifted.std_error < plain.std_error
    assert abs(shifted.value - plain.value) < 5.0 * np.hypot(shifted.std_error, plain.std_error)
