"""Command orchestration: scenario loading, dispatch and exit-code routing"""

import time
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np

from ..analysis.consistency import MODE_ENUMERATION, MODE_MONTE_CARLO, consistency_report
from ..analysis.cost import kernel_eval_counts
from ..analysis.histogram import histogram, pairwise_overlaps
from ..analysis.observables import opinion_clusters, opinion_spread
from ..engine.batching import sample_partition
from ..engine.coupling import error_cost_study, run_coupled
from ..engine.dynamics import Trajectory, run_full, run_rbm, sample_initial_state
from ..model.system import SystemSpec, ensure_valid
from ..scenarios.config_file import load_config
from ..scenarios.presets import Scenario, apply_overrides, list_presets, preset
from ..tools import exporters
from .exceptions import EXIT_CONFIG, EXIT_CONSISTENCY, ConfigurationError, RBMError
from .logger import logger
from .messages import CliInvocation, CommandResult, Subcommand
from .replicas import map_replicas, replica_streams


class SimulationOrchestrator:
    """Runs one CLI invocation end to end and maps failures to exit codes"""

    def __init__(self):
        self.logger = logger.get_logger()

    def handle_command(self, invocation: CliInvocation) -> CommandResult:
        """Handle a parsed invocation; never raises"""
        try:
            invocation.validate()
            if invocation.subcommand == Subcommand.LIST_PRESETS:
                return self._handle_list_presets()
            scenario = self._load_scenario(invocation)
            if invocation.subcommand == Subcommand.SIMULATE:
                return self._handle_simulate(invocation, scenario)
            elif invocation.subcommand == Subcommand.CONVERGE:
                return self._handle_converge(invocation, scenario)
            elif invocation.subcommand == Subcommand.CONSISTENCY:
                return self._handle_consistency(invocation, scenario)
            elif invocation.subcommand == Subcommand.COST:
                return self._handle_cost(invocation, scenario)
            return CommandResult(exit_code=EXIT_CONFIG, message=f"Unknown subcommand: {invocation.subcommand}")
        except RBMError as e:
            self.logger.error(f"{invocation.subcommand.value} failed: {e}")
            return CommandResult(exit_code=e.exit_code, message=str(e))
        except Exception as e:
            self.logger.exception(f"Unexpected error in {invocation.subcommand.value}")
            return CommandResult(exit_code=EXIT_CONFIG, message=f"internal error: {e}")

    def _load_scenario(self, invocation: CliInvocation) -> Scenario:
        if invocation.preset is not None:
            scenario = preset(invocation.preset)
        else:
            path = Path(invocation.config_path)
            try:
                text = path.read_text(encoding="utf-8")
            except OSError as e:
                raise ConfigurationError(f"cannot read config file {path}: {e.strerror}", location="cli") from e
            scenario = load_config(text, lenient=invocation.lenient, source=str(path))
        scenario = apply_overrides(scenario, invocation.overrides, force=invocation.force)
        self.logger.info(f"Scenario '{scenario.name}': N={scenario.spec.particle_counts}, p={scenario.spec.batch_sizes}")
        return scenario

    def _output_path(self, invocation: CliInvocation, stem: str, suffix: Optional[str] = None) -> Path:
        extension = suffix or invocation.output_format.value
        return Path(invocation.output) / f"{stem}.{extension}"

    def _handle_list_presets(self) -> CommandResult:
        names = list_presets()
        return CommandResult(message="\n".join(names), summary={"presets": names})

    def _handle_simulate(self, invocation: CliInvocation, scenario: Scenario) -> CommandResult:
        spec = scenario.spec
        ensure_valid(spec)
        run = scenario.run
        record_times = list(run.record_times) or None
        method = "full" if invocation.full else "rbm"

        def replica_task(index: int) -> Trajectory:
            if invocation.full:
                return run_full(spec, run.seed, record_times, replica=index)
            return run_rbm(spec, run.seed, record_times, replica=index, legacy_beta=invocation.legacy_beta)

        started = time.perf_counter()
        trajectories = map_replicas(replica_task, run.replicas, invocation.workers)
        elapsed = time.perf_counter() - started
        evaluations = sum(t.metadata["kernel_evaluations"] for t in trajectories)

        fmt = invocation.output_format.value
        files: List[str] = []
        if invocation.write_trajectory:
            path = exporters.export_trajectories(self._output_path(invocation, "trajectory"), trajectories, fmt)
            files.append(str(path))

        summary: Dict[str, Any] = {
            "scenario": scenario.name,
            "method": method,
            "seed": run.seed,
            "replicas": run.replicas,
            "steps": spec.step_count,
            "substeps": spec.substeps,
            "kernel_evaluations": evaluations,
            "spec_hash": spec.spec_hash(),
            "batch_sizes": list(spec.batch_sizes),
            "legacy_beta": invocation.legacy_beta,
        }
        if spec.dimension == 1:
            summary.update(self._one_dimensional_summary(invocation, spec, trajectories, files))

        summary_path = exporters.export_summary(self._output_path(invocation, "summary", "json"), summary)
        files.append(str(summary_path))
        message = (
            f"{run.replicas} replicas, {spec.step_count} steps, {evaluations} kernel evaluations, "
            f"wall time {elapsed:.2f}s"
        )
        self.logger.info(message)
        return CommandResult(message=message, files=files, summary=summary)

    def _one_dimensional_summary(
        self,
        invocation: CliInvocation,
        spec: SystemSpec,
        trajectories: List[Trajectory],
        files: List[str],
    ) -> Dict[str, Any]:
        """Histograms pooled over replicas plus spread and clusters of the first replica"""
        finals = [t.final.positions for t in trajectories]
        pooled = [np.concatenate([f[i] for f in finals], axis=0) for i in range(spec.n_species)]
        if invocation.value_range is not None:
            value_range = invocation.value_range
        else:
            value_range = (
                min(float(block.min()) for block in pooled),
                max(float(block.max()) for block in pooled),
            )
            if value_range[0] == value_range[1]:
                value_range = (value_range[0] - 0.5, value_range[1] + 0.5)
        histograms = [histogram(block, i, invocation.bins, value_range) for i, block in enumerate(pooled)]
        path = exporters.export_histograms(
            self._output_path(invocation, "histogram"), histograms, invocation.output_format.value
        )
        files.append(str(path))
        overlaps = pairwise_overlaps(histograms)
        return {
            "histogram_range": list(value_range),
            "overlaps": {f"{a + 1}-{b + 1}": value for (a, b), value in overlaps.items()},
            "spread": opinion_spread(finals[0]),
            "clusters": {
                str(i + 1): [
                    {"lo": c.lo, "hi": c.hi, "size": c.size}
                    for c in opinion_clusters(finals[0][i], invocation.cluster_gap)
                ]
                for i in range(spec.n_species)
            },
        }

    def _handle_converge(self, invocation: CliInvocation, scenario: Scenario) -> CommandResult:
        if invocation.sweep:
            return self._handle_sweep(invocation, scenario)
        run = scenario.run
        if len(run.tau_list) < 3:
            raise ConfigurationError(
                f"need >= 3 step sizes for a slope fit, got {len(run.tau_list)}", location="run.tau"
            )
        series = run_coupled(
            scenario.spec,
            run.seed,
            run.tau_list,
            ref_refinement=run.ref_refinement,
            replicas=run.replicas,
            record_times=list(run.record_times) or None,
            workers=invocation.workers,
            legacy_beta=invocation.legacy_beta,
        )
        table = exporters.export_error_series(
            self._output_path(invocation, "errors"), series, invocation.output_format.value
        )
        summary = {"scenario": scenario.name, **series.to_dict()}
        report = exporters.export_summary(self._output_path(invocation, "convergence", "json"), summary)
        if series.slope is None:
            message = "slope fit refused: fewer than 3 positive errors"
        else:
            message = f"slope {series.slope:.4f} over {len(series.points)} step sizes"
        self.logger.info(message)
        return CommandResult(message=message, files=[str(table), str(report)], summary=summary)

    def _handle_sweep(self, invocation: CliInvocation, scenario: Scenario) -> CommandResult:
        sweep = scenario.sweep
        if sweep is None:
            raise ConfigurationError(f"scenario '{scenario.name}' has no [sweep] section", location="sweep")
        spec = scenario.spec.with_end_time(sweep.end_time)
        rows = error_cost_study(
            spec,
            scenario.run.seed,
            sweep.batch_configurations,
            sweep.tau_list,
            ref_refinement=sweep.ref_refinement,
            replicas=scenario.run.replicas,
            workers=invocation.workers,
        )
        table = exporters.export_cost_study(
            self._output_path(invocation, "cost_study"), rows, invocation.output_format.value
        )
        summary = {"scenario": scenario.name, "rows": [r.to_dict() for r in rows]}
        message = f"error-versus-cost study: {len(sweep.batch_configurations)} batch configurations, {len(rows)} rows"
        return CommandResult(message=message, files=[str(table)], summary=summary)

    def _handle_consistency(self, invocation: CliInvocation, scenario: Scenario) -> CommandResult:
        spec = scenario.spec
        ensure_valid(spec)
        streams = replica_streams(scenario.run.seed)
        positions = sample_initial_state(spec, streams.init).positions
        if invocation.mc_samples is not None:
            mode, samples = MODE_MONTE_CARLO, invocation.mc_samples
        else:
            mode, samples = MODE_ENUMERATION, 0
        report = consistency_report(
            spec, positions, mode=mode, samples=samples, rng=streams.batch, legacy_beta=invocation.legacy_beta
        )
        path = exporters.export_consistency(
            self._output_path(invocation, "consistency"), report, invocation.output_format.value
        )
        summary = report.to_dict()
        theta = report.theory.theta
        if report.passed:
            message = (
                f"consistency passed (theta={theta:g}): max |E chi| = {report.max_mean_abs:.3e}, "
                f"max variance discrepancy = {report.max_variance_discrepancy:.3e}"
            )
            return CommandResult(message=message, files=[str(path)], summary=summary)
        message = f"consistency mismatch (theta={theta:g}): {report.failures[0]}"
        self.logger.error(message)
        return CommandResult(exit_code=EXIT_CONSISTENCY, message=message, files=[str(path)], summary=summary)

    def _handle_cost(self, invocation: CliInvocation, scenario: Scenario) -> CommandResult:
        spec = scenario.spec
        ensure_valid(spec)
        partition = sample_partition(spec, replica_streams(scenario.run.seed).batch)
        report = kernel_eval_counts(spec, partition)
        path = exporters.export_cost(self._output_path(invocation, "cost"), report, invocation.output_format.value)
        message = (
            f"kernel evaluations per step: full {report.full_per_step}, rbm {report.rbm_per_step}, "
            f"ratio {report.ratio:.4g}"
        )
        return CommandResult(message=message, files=[str(path)], summary=report.to_dict())
