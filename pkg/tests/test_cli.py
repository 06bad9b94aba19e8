import json

import pytest

from src.cli.main import main, parse_invocation, run
from src.core.exceptions import EXIT_BLOW_UP, EXIT_CONFIG, EXIT_CONSISTENCY, EXIT_OK, ConfigurationError
from src.core.messages import Subcommand

BLOW_UP_CONFIG = """\
[system]
name = stiff
dimension = 1
end_time = 60.0

[species.1]
particle_count = 2
batch_size = 2
sigma = 0.0
potential = quadratic_well
convexity_r = 1e6
center = 0.0
variance = 1.0

[run]
tau = 1.0
seed = 1
"""


def _opinion_args(output):
    return [
        "simulate", "--preset", "opinion_submissive", "--force",
        "--particle-counts", "40", "10", "2",
        "--tau", "0.01", "--end-time", "0.1", "--record-times", "0", "0.05", "0.1",
        "--output", str(output), "--workers", "1",
    ]


def test_list_presets(capsys):
    assert main(["list-presets"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "test3" in out.split()
    assert "oracle2_unequal" in out.split()


def test_parse_invocation():
    invocation = parse_invocation(["converge", "--preset", "test3", "--seed", "4", "--tau", "0.5", "0.25"])
    assert invocation.subcommand == Subcommand.CONVERGE
    assert invocation.overrides.seed == 4
    assert invocation.overrides.tau == (0.5, 0.25)
    assert invocation.overrides.replicas is None


def test_usage_errors_exit_with_one():
    with pytest.raises(ConfigurationError):
        parse_invocation(["simulate", "--bogus"])
    assert run(["simulate", "--preset", "test3", "--bogus"]).exit_code == EXIT_CONFIG
    assert run([]).exit_code == EXIT_CONFIG


def test_exactly_one_scenario_source(minimal_config_file):
    both = run(["cost", "--preset", "test3", "--config", str(minimal_config_file)])
    assert both.exit_code == EXIT_CONFIG
    assert run(["cost"]).exit_code == EXIT_CONFIG


def test_missing_config_file(tmp_path):
    result = run(["cost", "--config", str(tmp_path / "absent.ini"), "--output", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG
    assert "cannot read config file" in result.message


def test_cost_on_minimal_config(minimal_config_file, tmp_path):
    result = run(["cost", "--config", str(minimal_config_file), "--output", str(tmp_path), "--format", "json"])
    assert result.exit_code == EXIT_OK
    assert result.summary["full_per_step"] == 12
    assert result.summary["rbm_per_step"] == 4
    data = json.loads((tmp_path / "cost.json").read_text(encoding="utf-8"))
    assert data["rbm_per_step"] == 4


def test_cost_on_population_preset(tmp_path):
    result = run(["cost", "--preset", "population3", "--output", str(tmp_path)])
    assert result.exit_code == EXIT_OK
    assert result.summary["ratio_per_step"] <= 1e-2


def test_invalid_step_size(tmp_path):
    result = run(["simulate", "--preset", "test3", "--tau", "0", "--output", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG
    assert "step size must be positive" in result.message


def test_pinned_preset_refuses_changes(tmp_path):
    result = run(["simulate", "--preset", "test3", "--end-time", "2", "--output", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG
    assert "--force" in result.message


def test_simulate_writes_reproducible_files(tmp_path):
    first = run(_opinion_args(tmp_path / "a"))
    second = run(_opinion_args(tmp_path / "b"))
    assert first.exit_code == second.exit_code == EXIT_OK
    header = (tmp_path / "a" / "trajectory.csv").read_text(encoding="utf-8").splitlines()[0]
    assert header == "time,species,particle,x_1"
    for name in ("trajectory.csv", "histogram.csv", "summary.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    summary = json.loads((tmp_path / "a" / "summary.json").read_text(encoding="utf-8"))
    assert summary["steps"] == 10
    assert summary["method"] == "rbm"
    assert set(summary["overlaps"]) == {"1-2", "1-3", "2-3"}
    assert "wall time" in first.message


def test_simulate_full_without_trajectory(tmp_path):
    args = _opinion_args(tmp_path) + ["--full", "--no-trajectory", "--format", "json", "--bins", "5"]
    result = run(args)
    assert result.exit_code == EXIT_OK
    assert not (tmp_path / "trajectory.json").exists()
    rows = json.loads((tmp_path / "histogram.json").read_text(encoding="utf-8"))
    assert len(rows) == 3 * 5
    assert result.summary["method"] == "full"


def test_full_and_legacy_beta_conflict(tmp_path):
    result = run(_opinion_args(tmp_path) + ["--full", "--legacy-beta"])
    assert result.exit_code == EXIT_CONFIG


def test_converge_needs_three_step_sizes(tmp_path):
    result = run(["converge", "--preset", "test3", "--force", "--tau", "0.5", "--output", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG
    assert "need >= 3 step sizes" in result.message


def test_converge_refuses_slope_for_exact_runs(minimal_config_file, tmp_path):
    result = run([
        "converge", "--config", str(minimal_config_file), "--tau", "0.5", "0.25", "0.125",
        "--ref-refinement", "0", "--replicas", "2", "--output", str(tmp_path),
    ])
    assert result.exit_code == EXIT_OK
    assert result.message == "slope fit refused: fewer than 3 positive errors"
    lines = (tmp_path / "errors.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0] == "tau,mean_error,std_error"
    assert lines[1] == "0.5,0.0,0.0"
    assert json.loads((tmp_path / "convergence.json").read_text(encoding="utf-8"))["fit"] is None


def test_sweep_without_sweep_section(minimal_config_file, tmp_path):
    result = run(["converge", "--sweep", "--config", str(minimal_config_file), "--output", str(tmp_path)])
    assert result.exit_code == EXIT_CONFIG


@pytest.mark.parametrize("name,theta", [("oracle2_equal", "1"), ("oracle2_unequal", "1.5")])
def test_consistency_presets_pass(name, theta, tmp_path):
    result = run(["consistency", "--preset", name, "--output", str(tmp_path)])
    assert result.exit_code == EXIT_OK, result.message
    assert f"theta={theta}" in result.message
    lines = (tmp_path / "consistency.csv").read_text(encoding="utf-8").splitlines()
    assert lines[0].startswith("species,particle,closed_form_variance")
    assert len(lines) == 1 + len(result.summary["particles"])


def test_legacy_coefficients_fail_consistency(tmp_path):
    result = run(["consistency", "--preset", "oracle2_unequal", "--legacy-beta", "--output", str(tmp_path)])
    assert result.exit_code == EXIT_CONSISTENCY
    assert "consistency mismatch" in result.message


def test_monte_carlo_consistency(tmp_path):
    result = run([
        "consistency", "--preset", "oracle2_unequal", "--mc", "4000", "--format", "json", "--output", str(tmp_path),
    ])
    assert result.exit_code == EXIT_OK, result.message
    data = json.loads((tmp_path / "consistency.json").read_text(encoding="utf-8"))
    assert data["mode"] == "monte_carlo"
    assert data["particles"][0]["mc"]["samples"] == 4000


def test_blow_up_exit_code(tmp_path):
    config = tmp_path / "stiff.ini"
    config.write_text(BLOW_UP_CONFIG, encoding="utf-8")
    result = run(["simulate", "--config", str(config), "--output", str(tmp_path / "out")])
    assert result.exit_code == EXIT_BLOW_UP
    assert "blow-up detected" in result.message
