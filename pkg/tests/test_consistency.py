import numpy as np
import pytest

from src.analysis.consistency import (
    MODE_ENUMERATION,
    MODE_MONTE_CARLO,
    closed_form_chi_variance,
    consistency_report,
    empirical_chi_moments,
    exact_chi_moments,
)
from src.core.exceptions import ConfigurationError, EnumerationTooLargeError
from tests.helpers import build_spec, fixed_positions

ENUMERABLE = [
    ((4,), (2,)),
    ((6,), (3,)),
    ((4, 4), (2, 2)),
    ((4, 6), (2, 2)),
    ((6, 2), (3, 2)),
    ((2, 4, 2), (2, 2, 2)),
    ((4, 2, 6), (2, 2, 2)),
]


@pytest.mark.parametrize("counts,sizes", ENUMERABLE)
def test_closed_form_matches_enumeration(counts, sizes):
    spec = build_spec(counts=counts, sizes=sizes)
    report = consistency_report(spec, fixed_positions(spec), mode=MODE_ENUMERATION)
    assert report.passed, report.failures
    assert report.max_mean_abs <= 1e-10
    assert len(report.particles) == sum(counts)


def test_one_dimensional_system():
    spec = build_spec(counts=(4, 6), dimension=1)
    assert consistency_report(spec, fixed_positions(spec, seed=2)).passed


def test_exact_moments_for_single_particle():
    spec = build_spec(counts=(4, 6))
    positions = fixed_positions(spec)
    mean, variance = exact_chi_moments(spec, positions, 1, 3)
    closed, terms = closed_form_chi_variance(spec, positions, 1, 3)
    np.testing.assert_allclose(mean, 0.0, atol=1e-12)
    assert variance == pytest.approx(closed, rel=1e-12)
    assert variance > 0
    assert set(terms.pair) == {0}


def test_legacy_coefficients_are_biased():
    spec = build_spec(counts=(4, 6))
    report = consistency_report(spec, fixed_positions(spec), legacy_beta=True)
    assert not report.passed
    assert report.legacy_beta
    assert report.max_mean_abs > 1e-3


def test_equal_batch_counts_are_unaffected_by_legacy_coefficients():
    spec = build_spec(counts=(4, 4))
    assert consistency_report(spec, fixed_positions(spec), legacy_beta=True).passed


def test_monte_carlo_agrees_with_closed_form():
    spec = build_spec(counts=(4, 6))
    report = consistency_report(
        spec,
        fixed_positions(spec),
        mode=MODE_MONTE_CARLO,
        samples=20_000,
        rng=np.random.default_rng(5),
        particles=[(0, 0), (1, 0), (1, 5)],
    )
    assert report.passed, report.failures
    assert report.partition_count is None
    assert all(p.monte_carlo.samples == 20_000 for p in report.particles)


def test_monte_carlo_needs_two_samples():
    spec = build_spec(counts=(4,))
    with pytest.raises(ConfigurationError):
        empirical_chi_moments(spec, fixed_positions(spec), 0, 0, samples=1, rng=np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        consistency_report(spec, fixed_positions(spec), mode=MODE_MONTE_CARLO, samples=1)


def test_enumeration_respects_the_cap():
    spec = build_spec(counts=(4, 6))
    with pytest.raises(EnumerationTooLargeError):
        exact_chi_moments(spec, fixed_positions(spec), 0, 0, cap=10)
    with pytest.raises(EnumerationTooLargeError):
        consistency_report(spec, fixed_positions(spec), cap=10)


def test_unknown_mode_is_rejected():
    spec = build_spec(counts=(4,))
    with pytest.raises(ConfigurationError):
        consistency_report(spec, fixed_positions(spec), mode="bootstrap")


def test_report_dict_uses_one_based_ids():
    spec = build_spec(counts=(4, 6))
    data = consistency_report(spec, fixed_positions(spec)).to_dict()
    assert data["passed"] is True
    assert data["partition_count"] == 540
    assert data["theory"]["theta"] == 1.5
    assert data["particles"][0]["species"] == 1
    assert data["particles"][0]["particle"] == 1
