import numpy as np
import pytest

from src.analysis.consistency import exact_chi_moments
from src.analysis.theory import gamma_exponent, gamma_factors, theory_constants, theta, variance_bound
from src.model.kernels import KernelSpec
from tests.helpers import build_spec, fixed_positions


def test_gamma_factors_unequal_batch_counts():
    factors = gamma_factors(build_spec(counts=(4, 6)))
    assert factors[0] == pytest.approx(4 / 3, abs=1e-12)
    assert factors[1] == pytest.approx(23 / 10, abs=1e-12)


def test_single_species_reduction():
    for count, size in [(100, 2), (12, 3), (4, 2), (10, 10)]:
        spec = build_spec(counts=(count,), sizes=(size,))
        assert gamma_factors(spec)[0] == pytest.approx(1 / (size - 1) - 1 / (count - 1), abs=1e-15)


def test_gamma_factors_non_negative_on_random_configurations():
    rng = np.random.default_rng(123)
    for _ in range(10_000):
        n = int(rng.integers(1, 5))
        sizes = rng.integers(2, 7, size=n)
        batches = rng.integers(1, 7, size=n)
        spec = build_spec(counts=tuple(int(p * b) for p, b in zip(sizes, batches)), sizes=tuple(int(p) for p in sizes))
        assert min(gamma_factors(spec)) >= -1e-12


def test_theta_and_gamma():
    spec = build_spec(counts=(4, 6))
    assert theta(spec) == 1.5
    assert gamma_exponent(spec) == 6.0
    assert theta(build_spec(counts=(4, 4))) == 1.0


def test_variance_bound_undeclared_kernel():
    spec = build_spec(counts=(4,))
    custom = spec.__class__(
        dimension=spec.dimension,
        species=spec.species,
        kernels=((KernelSpec.custom(lambda d: d),),),
        end_time=spec.end_time,
        step=spec.step,
    )
    assert variance_bound(custom) is None
    assert theory_constants(custom).variance_bound is None


@pytest.mark.parametrize("counts,sizes", [((4,), (2,)), ((4, 4), (2, 2)), ((4, 6), (2, 2)), ((6, 2), (3, 2))])
def test_variance_bound_dominates_exact_variance(counts, sizes):
    spec = build_spec(counts=counts, sizes=sizes)
    positions = fixed_positions(spec)
    bound = variance_bound(spec)
    for i, species in enumerate(spec.species):
        for k in range(species.particle_count):
            _, variance = exact_chi_moments(spec, positions, i, k)
            assert variance <= bound


def test_gamma_does_not_increase_with_batch_size():
    count = 120
    sizes = [p for p in range(2, count + 1) if count % p == 0]
    factors = [gamma_factors(build_spec(counts=(count,), sizes=(p,)))[0] for p in sizes]
    assert all(later <= earlier for earlier, later in zip(factors, factors[1:]))
    assert factors[-1] == pytest.approx(0.0, abs=1e-15)
