import numpy as np
import pytest
from scipy import stats

from selgauss.errors import ParameterDomainError
from selgauss.models.selection_sets import IntervalUnion, SelectionSet


class TestIntervalUnion:
    def test_json_nulls_are_infinite(self):
        union = IntervalUnion.from_json([[None, -0.3], [0.3, None]])
        assert union.lows.tolist() == [-np.inf, 0.3]
        assert union.highs.tolist() == [-0.3, np.inf]
        assert union.to_json() == [[None, -0.3], [0.3, None]]

    @pytest.mark.parametrize("intervals", [
        [],
        [(1.0, 1.0)],
        [(0.0, 1.0), (0.5, 2.0)],
        [(0.5, 2.0), (None, 0.0)],
        [(0.0, 1.0), (1.0, 2.0)],
        [(float("nan"), 1.0)],
    ])
    def test_rejects_invalid_unions(self, intervals):
        with pytest.raises(ParameterDomainError):
            IntervalUnion(intervals)

    def test_membership_is_closed_at_finite_endpoints(self):
        union = IntervalUnion([(None, -0.3), (0.3, None)])
        assert union.contains([-0.3, 0.3, 5.0, -5.0]).all()
        assert not union.contains([0.0, 0.29]).any()

    def test_symmetric_two_sided(self):
        assert IntervalUnion.symmetric_two_sided(0.5) == IntervalUnion([(None, -0.5), (0.5, None)])
        assert IntervalUnion.symmetric_two_sided(0.0).is_full

    def test_projection_picks_the_nearest_interval(self):
        union = IntervalUnion([(-0.45, -0.2), (-0.1, 0.1), (0.2, 0.45)])
        assert union.project([0.16, -0.14, 1.0, 0.0]).tolist() == pytest.approx([0.2, -0.1, 0.45, 0.0])

    def test_mass_matches_normal_cdf(self):
        union = IntervalUnion([(None, -0.7), (-0.1, 2.5)])
        expected = stats.norm.cdf(-0.7) + stats.norm.cdf(2.5) - stats.norm.cdf(-0.1)
        assert float(np.exp(union.log_mass(0.0, 1.0))) == pytest.approx(expected, rel=1e-10)

    def test_far_tail_mass_stays_finite(self):
        union = IntervalUnion.one_sided(40.0)
        log_mass = float(union.log_mass(0.0, 1.0))
        assert np.isfinite(log_mass)
        assert log_mass == pytest.approx(stats.norm.logsf(40.0), rel=1e-8)


class TestSelectionSet:
    def test_mixed_components_are_padded(self):
        sets = SelectionSet([IntervalUnion.full(), IntervalUnion([(None, -1.0), (0.0, 1.0), (2.0, None)])])
        assert sets.lows.shape == (2, 3)
        assert sets.valid.tolist() == [[True, False, False], [True, True, True]]
        assert sets.contains([[5.0, 0.5], [5.0, 1.5]]).tolist() == [True, False]

    def test_full_set(self):
        assert SelectionSet.full(4).is_full
        assert not SelectionSet.replicate(IntervalUnion.one_sided(0.0), 4).is_full

    def test_dimension_mismatch(self):
        with pytest.raises(ParameterDomainError):
            SelectionSet.full(3).contains(np.zeros(2))

    def test_log_masses_per_component(self):
        sets = SelectionSet([IntervalUnion.one_sided(0.0), IntervalUnion([(None, 1.0)])])
        masses = np.exp(sets.log_masses([0.0, 0.0], [1.0, 1.0]))
        assert masses.tolist() == pytest.approx([0.5, stats.norm.cdf(1.0)])
        subset = np.exp(sets.log_masses([0.0], [1.0], indices=[1]))
        assert subset.tolist() == pytest.approx([stats.norm.cdf(1.0)])

    def test_json_and_equality(self):
        sets = SelectionSet.replicate(IntervalUnion.symmetric_two_sided(0.3), 3)
        assert SelectionSet.from_json(sets.to_json()) == sets
        assert sets.subset([0, 2]).q == 2
        assert sets.concat(SelectionSet.full(1)).q == 4
