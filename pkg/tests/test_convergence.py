import numpy as np
import pytest

from src.analysis.convergence import (
    ErrorPoint,
    ErrorSeries,
    convergence_slope,
    discrete_l2_error,
    squared_l2_error,
    summarize_replicas,
)
from src.core.exceptions import ConfigurationError, InvalidStateError
from src.engine.dynamics import ParticleState


def test_squared_error_is_species_weighted():
    first = (np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([[3.0, 0.0]]))
    second = (np.zeros((2, 2)), np.zeros((1, 2)))
    assert squared_l2_error(first, second) == pytest.approx(1.0 + 9.0)
    assert discrete_l2_error(ParticleState(positions=first), second) == pytest.approx(np.sqrt(10.0))


def test_shape_mismatch_is_rejected():
    with pytest.raises(InvalidStateError):
        squared_l2_error((np.zeros((2, 1)),), (np.zeros((3, 1)),))


def test_slope_of_exact_power_law():
    taus = [2.0 ** -e for e in range(2, 7)]
    fit = convergence_slope([(tau, 3.0 * tau ** 0.5) for tau in taus])
    assert fit.slope == pytest.approx(0.5, abs=1e-12)
    assert fit.intercept == pytest.approx(np.log(3.0), abs=1e-12)
    assert fit.residual == pytest.approx(0.0, abs=1e-12)
    assert fit.points == 5


def test_slope_needs_three_points():
    with pytest.raises(ConfigurationError) as info:
        convergence_slope([(0.5, 1.0)])
    assert "need >= 3 step sizes" in str(info.value)


def test_zero_errors_are_excluded():
    fit = convergence_slope([(0.5, 0.0), (0.25, 0.4), (0.125, 0.2), (0.0625, 0.1)])
    assert fit.points == 3
    assert fit.slope == pytest.approx(1.0)
    assert convergence_slope([(0.5, 0.0), (0.25, 0.0), (0.125, 1.0)]) is None


def test_replica_summary():
    assert summarize_replicas([4.0, 4.0, 4.0]) == (2.0, 0.0)
    mean, se = summarize_replicas([1.0, 9.0])
    assert mean == pytest.approx(np.sqrt(5.0))
    assert se > 0


def test_error_series_requires_decreasing_steps():
    points = [ErrorPoint(0.125, 0.1, 0.0), ErrorPoint(0.25, 0.2, 0.0)]
    with pytest.raises(InvalidStateError):
        ErrorSeries(points=points, replicas=1, seed=0, refinement=2)


def test_error_series_rows_and_dict():
    points = [ErrorPoint(0.25, 0.2, 0.01), ErrorPoint(0.125, 0.1, 0.02)]
    series = ErrorSeries(points=points, replicas=3, seed=4, refinement=2)
    assert series.csv_rows() == [(0.25, 0.2, 0.01), (0.125, 0.1, 0.02)]
    assert series.slope is None
    assert series.to_dict()["replicas"] == 3
