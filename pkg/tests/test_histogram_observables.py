import numpy as np
import pytest

from src.analysis.histogram import histogram, overlap_coefficient, pairwise_overlaps
from src.analysis.observables import (
    opinion_clusters,
    opinion_spread,
    second_moment,
)
from src.core.exceptions import ConfigurationError, InvalidStateError
from src.engine.dynamics import ParticleState


def test_histogram_density():
    h = histogram(np.array([[0.1], [0.2], [0.6], [0.9]]), species=0, bin_count=2, value_range=(0.0, 1.0))
    np.testing.assert_allclose(h.density, [1.0, 1.0])
    assert h.below == h.above == 0.0
    assert h.rows()[0] == (1, 0.0, 0.5, 1.0)
    np.testing.assert_allclose(h.centers, [0.25, 0.75])


def test_out_of_range_samples_are_reported():
    h = histogram(np.array([-1.0, 0.5]), species=2, bin_count=1, value_range=(0.0, 1.0))
    assert h.below == 0.5
    assert h.density[0] == pytest.approx(1.0)
    assert h.to_dict()["species"] == 3


def test_density_integrates_to_one_with_samples_outside_the_range():
    h = histogram(np.array([0.1, 0.2, 0.6, 5.0]), species=0, bin_count=4, value_range=(0.0, 1.0))
    assert float(np.sum(h.density) * h.width) == pytest.approx(1.0)
    np.testing.assert_allclose(h.density, [8 / 3, 0.0, 4 / 3, 0.0])
    assert h.above == 0.25 and h.below == 0.0
    assert h.samples == 4


def test_no_samples_inside_the_range_gives_zero_density():
    h = histogram(np.array([2.0, 3.0]), species=0, bin_count=2, value_range=(0.0, 1.0))
    np.testing.assert_array_equal(h.density, [0.0, 0.0])
    assert h.above == 1.0


def test_constant_samples_get_a_unit_range():
    h = histogram(np.full(5, 2.0), species=0, bin_count=4)
    assert h.edges[0] == 1.5 and h.edges[-1] == 2.5


def test_histogram_input_checks():
    with pytest.raises(ConfigurationError):
        histogram(np.zeros((3, 2)), species=0, bin_count=4)
    with pytest.raises(ConfigurationError):
        histogram(np.zeros(3), species=0, bin_count=0)
    with pytest.raises(ConfigurationError):
        histogram(np.zeros(3), species=0, bin_count=2, value_range=(1.0, 1.0))
    with pytest.raises(InvalidStateError):
        histogram(np.zeros((0, 1)), species=0, bin_count=2)


def test_overlap_bounds():
    grid = (0.0, 1.0)
    left = histogram(np.array([0.1, 0.2]), 0, 2, grid)
    right = histogram(np.array([0.8, 0.9]), 1, 2, grid)
    assert overlap_coefficient(left, left) == pytest.approx(1.0)
    assert overlap_coefficient(left, right) == 0.0
    overlaps = pairwise_overlaps([left, right, left])
    assert set(overlaps) == {(0, 1), (0, 2), (1, 2)}
    assert overlaps[(0, 2)] == pytest.approx(1.0)
    with pytest.raises(ConfigurationError):
        overlap_coefficient(left, histogram(np.array([0.1]), 0, 3, grid))


def test_second_moments():
    blocks = (np.array([[1.0, 0.0], [0.0, 2.0]]), np.array([[3.0, 0.0]]))
    assert second_moment(blocks) == pytest.approx((1 + 4 + 9) / 3)
    assert second_moment(ParticleState(positions=blocks)) == pytest.approx(14 / 3)
    with pytest.raises(InvalidStateError):
        second_moment((np.zeros((0, 1)),))


def test_spread_and_clusters():
    blocks = (np.array([[0.0], [3.0]]), np.array([[-1.0]]))
    assert opinion_spread(blocks) == 4.0
    clusters = opinion_clusters(np.array([10.0, 0.0, 3.2, 0.5, 3.0]), gap=1.0)
    assert [c.size for c in clusters] == [2, 2, 1]
    assert clusters[1].lo == 3.0 and clusters[1].hi == 3.2
    assert opinion_clusters(np.array([]), gap=1.0) == []
