from dataclasses import replace

import numpy as np
import pytest

from src.core.exceptions import EXIT_BLOW_UP, BlowUpError, ConfigurationError, InvalidStateError
from src.engine.batching import interaction_coefficients, sample_partition
from src.engine.dynamics import (
    EvaluationCounter,
    ParticleState,
    chi,
    em_step,
    full_drift,
    full_drift_field,
    pair_sums,
    rbm_drift,
    rbm_drift_field,
    run_full,
    run_rbm,
    sample_noise,
)
from src.model.diffusion import DiffusionSpec
from src.model.kernels import KernelSpec
from src.model.potentials import PotentialSpec
from tests.helpers import build_spec, fixed_positions


def test_pair_sums_counts_and_excludes_self():
    kernel = KernelSpec.scaled_cauchy(1.0, 1.0)
    x = np.array([[[0.0], [1.0], [3.0], [-1.0]]])
    counter = EvaluationCounter()
    sums = pair_sums(kernel, x, x, exclude_self=True, counter=counter)
    assert counter.count == 12
    expected = sum(kernel.evaluate(x[0, 1] - x[0, l]) for l in (0, 2, 3))
    np.testing.assert_allclose(sums[0, 1], expected)


def test_zero_kernel_is_counted_but_not_evaluated():
    counter = EvaluationCounter()
    x = np.zeros((2, 3, 1))
    sums = pair_sums(KernelSpec.zero(), x, x, exclude_self=True, counter=counter)
    assert counter.count == 12
    assert not sums.any()


def test_field_and_single_particle_drifts_agree():
    spec = build_spec(counts=(4, 6))
    positions = fixed_positions(spec)
    state = ParticleState(positions=positions)
    table = interaction_coefficients(spec)
    partition = sample_partition(spec, np.random.default_rng(9))
    full = full_drift_field(spec, table)(positions, None)
    batched = rbm_drift_field(spec, table)(positions, partition)
    for i, species in enumerate(spec.species):
        for k in range(species.particle_count):
            np.testing.assert_allclose(full[i][k], full_drift(spec, state, table, i, k), rtol=1e-12, atol=1e-12)
            np.testing.assert_allclose(
                batched[i][k], rbm_drift(spec, state, partition, table, i, k), rtol=1e-12, atol=1e-12
            )


def test_chi_is_batched_minus_full_interaction():
    spec = build_spec(counts=(4, 6))
    positions = fixed_positions(spec)
    state = ParticleState(positions=positions)
    table = interaction_coefficients(spec)
    partition = sample_partition(spec, np.random.default_rng(1))
    difference = rbm_drift(spec, state, partition, table, 1, 2) - full_drift(spec, state, table, 1, 2)
    np.testing.assert_allclose(chi(spec, positions, partition, table, 1, 2), difference, atol=1e-12)


def test_single_particle_drift_checks_indices():
    spec = build_spec(counts=(4,))
    state = ParticleState(positions=fixed_positions(spec))
    with pytest.raises(IndexError):
        full_drift(spec, state, interaction_coefficients(spec), 0, 4)


def test_full_batches_reproduce_full_dynamics_bitwise():
    spec = build_spec(counts=(4, 6), sizes=(4, 6), step=0.125)
    full = run_full(spec, seed=17, record_times=[0.5, 1.0])
    batched = run_rbm(spec, seed=17, record_times=[0.5, 1.0])
    assert full.times == batched.times == [0.0, 0.5, 1.0]
    for a, b in zip(full.final.positions, batched.final.positions):
        np.testing.assert_array_equal(a, b)


def test_runs_are_deterministic_per_replica():
    spec = build_spec(counts=(4, 6))
    first = run_rbm(spec, seed=5)
    again = run_rbm(spec, seed=5)
    other = run_rbm(spec, seed=5, replica=1)
    np.testing.assert_array_equal(first.final.positions[1], again.final.positions[1])
    assert not np.array_equal(first.final.positions[1], other.final.positions[1])
    assert first.metadata["spec_hash"] == spec.spec_hash()


def test_kernel_evaluations_recorded():
    spec = build_spec(counts=(4,), step=0.25)
    assert run_rbm(spec, seed=0).metadata["kernel_evaluations"] == 4 * 4
    assert run_full(spec, seed=0).metadata["kernel_evaluations"] == 4 * 12
    substepped = build_spec(counts=(4,), step=0.25, substeps=2)
    assert run_rbm(substepped, seed=0).metadata["kernel_evaluations"] == 2 * 4 * 4


def test_record_times_outside_the_run_are_rejected():
    with pytest.raises(ConfigurationError):
        run_rbm(build_spec(), seed=0, record_times=[2.0])


def test_sample_noise_scales_standard_normals():
    spec = build_spec(counts=(4, 6))
    noise = sample_noise(np.random.default_rng(3), spec, 0.25)
    reference = np.random.default_rng(3)
    np.testing.assert_array_equal(noise.increments[0], 0.5 * reference.standard_normal((4, 2)))
    np.testing.assert_array_equal(noise.increments[1], 0.5 * reference.standard_normal((6, 2)))


def test_noise_increment_statistics():
    spec = build_spec(counts=(500_000,), sizes=(2,), step=0.25)
    values = np.concatenate([block.reshape(-1) for block in sample_noise(np.random.default_rng(8), spec).increments])
    assert values.size == 1_000_000
    assert abs(float(values.mean())) < 5 * np.sqrt(0.25 / values.size)
    assert float(values.var()) == pytest.approx(0.25, rel=0.01)


def test_euler_step_on_a_quadratic_well():
    spec = build_spec(counts=(4,), dimension=1, sigma=0.0, step=0.5, interacting=False)
    state = ParticleState(positions=(np.ones((4, 1)),))
    noise = sample_noise(np.random.default_rng(0), spec)
    stepped = em_step(spec, state, full_drift_field(spec, interaction_coefficients(spec)), None, noise)
    np.testing.assert_array_equal(stepped.positions[0], np.full((4, 1), 0.5))
    assert stepped.time == 0.5


def test_euler_step_without_drift_adds_the_increment():
    spec = build_spec(counts=(4, 6), sigma=1.0, interacting=False, confined=False)
    state = ParticleState(positions=(np.zeros((4, 2)), np.zeros((6, 2))))
    noise = sample_noise(np.random.default_rng(4), spec)
    table = interaction_coefficients(spec)
    partition = sample_partition(spec, np.random.default_rng(4))
    stepped = em_step(spec, state, rbm_drift_field(spec, table), partition, noise)
    for moved, start, increment in zip(stepped.positions, state.positions, noise.increments):
        np.testing.assert_array_equal(moved - start, increment)


def test_constant_multiplicative_noise_matches_additive_bitwise():
    additive = build_spec(counts=(4, 6), sigma=0.7)
    species = tuple(replace(s, diffusion=DiffusionSpec.multiplicative("constant", 0.7)) for s in additive.species)
    multiplicative = replace(additive, species=species)
    state = ParticleState(positions=fixed_positions(additive))
    noise = sample_noise(np.random.default_rng(6), additive)
    partition = sample_partition(additive, np.random.default_rng(6))
    table = interaction_coefficients(additive)
    first = em_step(additive, state, rbm_drift_field(additive, table), partition, noise)
    second = em_step(multiplicative, state, rbm_drift_field(multiplicative, table), partition, noise)
    for a, b in zip(first.positions, second.positions):
        np.testing.assert_array_equal(a, b)


def test_noise_as_drift_is_deterministic():
    spec = build_spec(counts=(4,), sigma=1.0, interacting=False, confined=False, noise_as_drift=True)
    state = ParticleState(positions=(np.zeros((4, 2)),))
    noise = sample_noise(np.random.default_rng(0), spec, 0.25)
    table = interaction_coefficients(spec)
    partition = sample_partition(spec, np.random.default_rng(0))
    stepped = em_step(spec, state, rbm_drift_field(spec, table), partition, noise)
    np.testing.assert_allclose(stepped.positions[0], np.full((4, 2), 0.25))


def test_blow_up_is_reported_with_location():
    spec = build_spec(counts=(4,), interacting=False)
    exploding = spec.species[0].__class__(
        index=1,
        particle_count=4,
        batch_size=2,
        diffusion=spec.species[0].diffusion,
        potential=PotentialSpec.custom(lambda x: np.full_like(x, np.inf)),
        initial=spec.species[0].initial,
    )
    spec = spec.__class__(
        dimension=2, species=(exploding,), kernels=spec.kernels, end_time=1.0, step=0.25
    )
    with pytest.raises(BlowUpError) as info:
        run_rbm(spec, seed=0)
    assert info.value.species == 0
    assert info.value.exit_code == EXIT_BLOW_UP


def test_trajectory_rejects_non_increasing_times():
    trajectory = run_rbm(build_spec(), seed=0)
    with pytest.raises(InvalidStateError):
        trajectory.append(ParticleState(positions=trajectory.final.positions, time=0.5))
