import numpy as np
import pytest

from src.core.exceptions import ConfigurationError
from src.model.system import GaussianInit, PointCloudInit, ensure_valid, validate_system
from src.scenarios.presets import preset
from tests.helpers import build_spec


def _errors(spec):
    return [d for d in validate_system(spec) if d.is_error]


def test_valid_spec_has_no_errors():
    assert _errors(build_spec(counts=(4, 6))) == []


def test_batch_size_must_divide_particle_count():
    errors = _errors(build_spec(counts=(4,), sizes=(3,)))
    assert len(errors) == 1
    assert errors[0].location == "species.1.batch_size"
    assert "batch size must divide particle count" in errors[0].message


def test_batch_size_of_one_is_rejected():
    errors = _errors(build_spec(counts=(4,), sizes=(1,)))
    assert errors[0].message.startswith("batch size must be at least 2")


def test_non_positive_step_is_rejected():
    errors = _errors(build_spec(step=0.0))
    assert errors[0].location == "run.tau"


def test_ensure_valid_raises_with_location():
    with pytest.raises(ConfigurationError) as info:
        ensure_valid(build_spec(counts=(4, 6), sizes=(2, 4)))
    assert info.value.location == "species.2.batch_size"
    assert "species.2.batch_size" in str(info.value)


def test_validation_is_deterministic():
    spec = preset("test3").spec
    assert validate_system(spec) == validate_system(spec)


def test_weak_confinement_gives_warnings_only():
    diagnostics = validate_system(preset("test3").spec)
    assert diagnostics
    assert all(not d.is_error for d in diagnostics)
    assert any(d.location == "species.1.potential" for d in diagnostics)


def test_step_grid_clips_the_last_interval():
    spec = build_spec(end_time=1.0, step=0.3)
    sizes = spec.step_sizes()
    assert spec.step_count == 4
    assert sizes[:3] == [0.3, 0.3, 0.3]
    assert sizes[3] == pytest.approx(0.1)
    assert build_spec(end_time=1.0, step=0.25).step_sizes() == [0.25] * 4


def test_full_batches_and_hash():
    spec = build_spec(counts=(4, 6))
    full = spec.with_full_batches()
    assert full.batch_sizes == (4, 6)
    assert full.batch_counts == (1, 1)
    assert spec.spec_hash() == build_spec(counts=(4, 6)).spec_hash()
    assert spec.spec_hash() != full.spec_hash()


def test_override_length_mismatch():
    with pytest.raises(ConfigurationError):
        build_spec(counts=(4, 6)).with_batch_sizes((2,))


def test_initial_distributions():
    rng = np.random.default_rng(0)
    samples = GaussianInit(mean=(1.0, -2.0), variance=4.0).sample(rng, 20000, 2)
    assert samples.shape == (20000, 2)
    np.testing.assert_allclose(samples.mean(axis=0), [1.0, -2.0], atol=0.1)
    cloud = PointCloudInit(positions=((0.0,), (1.0,)))
    np.testing.assert_array_equal(cloud.sample(None, 2, 1), [[0.0], [1.0]])
