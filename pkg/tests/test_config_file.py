from dataclasses import replace

import pytest

from src.core.exceptions import ConfigParseError, ConfigurationError
from src.model.kernels import KernelForm, KernelSpec
from src.scenarios.config_file import load_config, scenario_json, serialize
from src.scenarios.presets import list_presets, preset


def test_minimal_config(minimal_config_text):
    scenario = load_config(minimal_config_text)
    spec = scenario.spec
    assert scenario.name == "minimal"
    assert not scenario.pinned
    assert spec.dimension == 1
    assert spec.particle_counts == (4,)
    assert spec.step == 0.5
    assert spec.kernels[0][0].form == KernelForm.ZERO
    assert scenario.run.seed == 3
    assert scenario.run.tau_list == (0.5,)
    assert spec.species[0].initial.mean == (0.0,)


def test_validation_errors_carry_line_and_column(minimal_config_text):
    text = minimal_config_text.replace("batch_size = 2", "batch_size = 3")
    with pytest.raises(ConfigParseError) as info:
        load_config(text)
    error = info.value
    assert error.location == "species.1.batch_size"
    assert (error.line, error.column) == (8, 14)
    assert "must divide particle count" in str(error)


def test_unknown_keys(minimal_config_text):
    text = minimal_config_text.replace("sigma = 1.0", "sigma = 1.0\ncolour = red")
    with pytest.raises(ConfigParseError) as info:
        load_config(text)
    assert "unknown key 'colour'" in str(info.value)
    assert info.value.line == 10
    assert load_config(text, lenient=True).spec.particle_counts == (4,)


def test_unknown_sections(minimal_config_text):
    text = minimal_config_text + "\n[plot]\nstyle = dark\n"
    with pytest.raises(ConfigParseError):
        load_config(text)
    assert load_config(text, lenient=True).name == "minimal"


def test_missing_section_header():
    with pytest.raises(ConfigParseError) as info:
        load_config("dimension = 1\n[system]\n")
    assert info.value.line == 1


def test_missing_run_section(minimal_config_text):
    text = minimal_config_text.split("[run]")[0]
    with pytest.raises(ConfigParseError) as info:
        load_config(text)
    assert "missing [run] section" in str(info.value)


def test_species_numbering_must_be_contiguous(minimal_config_text):
    with pytest.raises(ConfigParseError):
        load_config(minimal_config_text.replace("[species.1]", "[species.2]"))


def test_kernel_outside_species_range(minimal_config_text):
    text = minimal_config_text + "\n[kernel.1.2]\nform = zero\n"
    with pytest.raises(ConfigParseError) as info:
        load_config(text)
    assert "outside species" in str(info.value)


def test_bad_values(minimal_config_text):
    with pytest.raises(ConfigParseError):
        load_config(minimal_config_text.replace("tau = 0.5", "tau = fast"))
    with pytest.raises(ConfigParseError) as info:
        load_config(minimal_config_text.replace("sigma = 1.0", "sigma = 1.0\ndiffusion = multiplicative"))
    assert info.value.location == "species.1.profile"


def test_kernel_sections_and_multiplicative_noise(minimal_config_text):
    text = minimal_config_text.replace(
        "sigma = 1.0", "sigma = 0.5\ndiffusion = multiplicative\nprofile = tanh_bounded"
    ) + "\n[kernel.1.1]\nform = bump_gradient\nstrength = 2.0\nwidth = 0.5\norientation = -1\n"
    spec = load_config(text).spec
    assert spec.kernels[0][0] == KernelSpec.bump_gradient(2.0, 0.5, -1.0)
    assert spec.species[0].diffusion.profile == "tanh_bounded"


@pytest.mark.parametrize("name", list_presets())
def test_presets_survive_a_round_trip(name):
    scenario = preset(name)
    assert load_config(serialize(scenario)) == scenario


def test_custom_callables_cannot_be_serialized():
    scenario = preset("oracle2_equal")
    spec = scenario.spec
    kernels = ((KernelSpec.custom(lambda d: d), spec.kernels[0][1]), spec.kernels[1])
    with pytest.raises(ConfigurationError):
        serialize(replace(scenario, spec=replace(spec, kernels=kernels)))


def test_scenario_json_is_deterministic():
    assert scenario_json(preset("test3")) == scenario_json(preset("test3"))
