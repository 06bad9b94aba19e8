"""
Synchronously coupled full vs random-batch runs and error-versus-cost studies.

Each replica draws its initial samples once and one fine Brownian path at
step min(tau) / (2^s * substeps). For every tau the reference solution is a
full Euler-Maruyama run at tau / 2^s and the batched run uses step tau; both
consume sums of the same fine increments.
"""

import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..analysis.convergence import (
    MIN_SLOPE_POINTS,
    ErrorPoint,
    ErrorSeries,
    convergence_slope,
    squared_l2_error,
    summarize_replicas,
)
from ..analysis.cost import closed_form_counts
from ..analysis.theory import theta
from ..core.exceptions import ConfigurationError
from ..core.logger import logger
from ..core.replicas import map_replicas, replica_streams
from ..model.system import SystemSpec, ensure_valid
from .batching import interaction_coefficients, sample_partition
from .dynamics import (
    NoiseIncrements,
    ParticleState,
    Positions,
    em_step,
    full_drift_field,
    rbm_drift_field,
    sample_initial_state,
)

# Tolerance for "tau divides T" and "tau_min divides tau"
GRID_RTOL = 1e-9


def _ratio(numerator: float, denominator: float, what: str) -> int:
    value = numerator / denominator
    rounded = round(value)
    if rounded < 1 or abs(value - rounded) > GRID_RTOL * max(1.0, value):
        raise ConfigurationError(f"{what} must be an integer, got {value:.12g}", location="run.tau")
    return int(rounded)


@dataclass(frozen=True)
class CouplingPlan:
    """Integer grid bookkeeping shared by all replicas"""
    taus: Tuple[float, ...]
    refinement: int
    fine_step: float
    fine_steps: int
    coarse_steps: Dict[float, int]
    fine_per_tau: Dict[float, int]


def plan_coupling(spec: SystemSpec, tau_list: Sequence[float], refinement: int) -> CouplingPlan:
    """
    Validate the step-size list and derive the fine grid.

    Raises:
        ConfigurationError: Duplicate or non-positive tau, tau not dividing T,
            or tau not an integer multiple of the smallest tau
    """
    if not tau_list:
        raise ConfigurationError("at least one step size is required", location="run.tau")
    if refinement < 0:
        raise ConfigurationError(f"reference refinement must be >= 0, got {refinement}", location="run.ref_refinement")
    taus = tuple(sorted((float(t) for t in tau_list), reverse=True))
    if any(t <= 0 for t in taus):
        raise ConfigurationError(f"step sizes must be positive, got {list(taus)}", location="run.tau")
    if len(set(taus)) != len(taus):
        raise ConfigurationError(f"duplicate step sizes in {list(taus)}", location="run.tau")
    tau_min = taus[-1]
    fine_step = tau_min / (2 ** refinement * spec.substeps)
    coarse_steps = {}
    fine_per_tau = {}
    for tau in taus:
        coarse_steps[tau] = _ratio(spec.end_time, tau, f"T / tau for tau={tau:g}")
        fine_per_tau[tau] = _ratio(tau, tau_min, f"tau / tau_min for tau={tau:g}") * 2 ** refinement * spec.substeps
    fine_steps = coarse_steps[tau_min] * 2 ** refinement * spec.substeps
    return CouplingPlan(
        taus=taus,
        refinement=refinement,
        fine_step=fine_step,
        fine_steps=fine_steps,
        coarse_steps=coarse_steps,
        fine_per_tau=fine_per_tau,
    )


def _aggregate(path: Positions, group: int) -> Positions:
    """Sum consecutive groups of fine increments: (F, N, d) -> (F / group, N, d)"""
    return tuple(block.reshape(-1, group, *block.shape[1:]).sum(axis=1) for block in path)


def _integrate(
    spec: SystemSpec,
    drift_fn,
    initial: ParticleState,
    increments: Positions,
    dt: float,
    steps_per_interval: int,
    batch_rng: Optional[np.random.Generator],
    record_intervals: Sequence[int],
) -> Dict[int, ParticleState]:
    """Run on a prescribed increment sequence; returns states after the recorded intervals"""
    intervals = increments[0].shape[0] // steps_per_interval
    wanted = set(record_intervals)
    state = initial
    recorded: Dict[int, ParticleState] = {}
    index = 0
    for m in range(1, intervals + 1):
        partition = sample_partition(spec, batch_rng) if batch_rng is not None else None
        for _ in range(steps_per_interval):
            noise = NoiseIncrements(increments=tuple(block[index] for block in increments), dt=dt)
            state = em_step(spec, state, drift_fn, partition, noise, step_index=m)
            index += 1
        if m in wanted:
            recorded[m] = state
    return recorded


def _profile_intervals(spec: SystemSpec, tau: float, steps: int, record_times: Optional[Sequence[float]]) -> List[int]:
    if not record_times:
        return [steps]
    chosen = set()
    for t in record_times:
        if t < 0 or t > spec.end_time * (1 + GRID_RTOL):
            raise ConfigurationError(f"record time {t} outside [0, {spec.end_time}]", location="run.record_times")
        chosen.add(min(steps, max(1, math.ceil(t / tau - GRID_RTOL))))
    chosen.add(steps)
    return sorted(chosen)


def coupled_replica(
    spec: SystemSpec,
    seed: int,
    replica: int,
    plan: CouplingPlan,
    record_times: Optional[Sequence[float]] = None,
    legacy_beta: bool = False,
) -> Dict[float, Dict[int, float]]:
    """
    Squared L2 error per tau (and per recorded interval) for one replica.

    Returns:
        {tau: {interval m: sum_i (1/N_i) sum_k |X_rbm - X_ref|^2 at t = m tau}}
    """
    streams = replica_streams(seed, replica)
    initial = sample_initial_state(spec, streams.init)
    scale = math.sqrt(plan.fine_step)
    path = tuple(
        scale * streams.noise.standard_normal((plan.fine_steps, s.particle_count, spec.dimension))
        for s in spec.species
    )
    reference_coefficients = interaction_coefficients(spec)
    batched_coefficients = interaction_coefficients(spec, legacy_beta=legacy_beta)
    full_fn = full_drift_field(spec, reference_coefficients)
    rbm_fn = rbm_drift_field(spec, batched_coefficients)

    results: Dict[float, Dict[int, float]] = {}
    for tau in plan.taus:
        steps = plan.coarse_steps[tau]
        intervals = _profile_intervals(spec, tau, steps, record_times)
        tau_ref = tau / 2 ** plan.refinement
        reference_group = plan.fine_per_tau[tau] // 2 ** plan.refinement
        batched_group = plan.fine_per_tau[tau] // spec.substeps
        # only the fine steps up to T for this tau
        used = steps * plan.fine_per_tau[tau]
        window = tuple(block[:used] for block in path)

        reference = _integrate(
            spec, full_fn, initial, _aggregate(window, reference_group), tau_ref,
            2 ** plan.refinement, None, intervals,
        )
        batched = _integrate(
            spec, rbm_fn, initial, _aggregate(window, batched_group), tau / spec.substeps,
            spec.substeps, streams.batch, intervals,
        )
        results[tau] = {
            m: squared_l2_error(batched[m].positions, reference[m].positions) for m in intervals
        }
    return results


def run_coupled(
    spec: SystemSpec,
    seed: int,
    tau_list: Sequence[float],
    ref_refinement: int = 2,
    replicas: int = 10,
    record_times: Optional[Sequence[float]] = None,
    workers: Optional[int] = None,
    legacy_beta: bool = False,
) -> ErrorSeries:
    """
    Discrete L2(Omega) error at T between coupled batched and reference runs, per tau.

    The slope of ln E against ln tau is fitted when at least three step sizes
    are given and at least three errors are positive.
    """
    ensure_valid(spec.with_step(min(tau_list)) if tau_list else spec)
    plan = plan_coupling(spec, tau_list, ref_refinement)
    log = logger.get_logger()
    log.info(
        f"Coupled run: {len(plan.taus)} step sizes, refinement 2^{ref_refinement}, "
        f"{replicas} replicas, {plan.fine_steps} fine steps"
    )
    per_replica = map_replicas(
        lambda r: coupled_replica(spec, seed, r, plan, record_times, legacy_beta), replicas, workers
    )

    points = []
    profile: Dict[float, List[Tuple[float, float]]] = {}
    for tau in plan.taus:
        steps = plan.coarse_steps[tau]
        mean_error, std_error = summarize_replicas([result[tau][steps] for result in per_replica])
        points.append(ErrorPoint(tau=tau, mean_error=mean_error, std_error=std_error))
        if record_times:
            intervals = sorted(per_replica[0][tau])
            profile[tau] = [
                (min(spec.end_time, m * tau), summarize_replicas([result[tau][m] for result in per_replica])[0])
                for m in intervals
            ]
        log.debug(f"tau={tau:g}: E={mean_error:.6g} (se {std_error:.3g})")

    fit = None
    if len(points) >= MIN_SLOPE_POINTS:
        fit = convergence_slope([(p.tau, p.mean_error) for p in points])
    return ErrorSeries(
        points=points,
        replicas=replicas,
        seed=seed,
        refinement=ref_refinement,
        fit=fit,
        profile=profile,
        batch_sizes=spec.batch_sizes,
    )


@dataclass(frozen=True)
class CostStudyRow:
    batch_sizes: Tuple[int, ...]
    theta: float
    tau: float
    mean_error: float
    std_error: float
    rbm_evaluations: int
    reference_evaluations: int

    def to_dict(self) -> dict:
        return {
            "batch_sizes": list(self.batch_sizes),
            "theta": self.theta,
            "tau": self.tau,
            "mean_error": self.mean_error,
            "std_error": self.std_error,
            "rbm_evaluations": self.rbm_evaluations,
            "reference_evaluations": self.reference_evaluations,
        }


def error_cost_study(
    spec: SystemSpec,
    seed: int,
    batch_configurations: Sequence[Sequence[int]],
    tau_list: Sequence[float],
    ref_refinement: int = 2,
    replicas: int = 10,
    workers: Optional[int] = None,
) -> List[CostStudyRow]:
    """
    Coupled error together with kernel-evaluation totals for several batch-size choices.

    Each configuration reuses the same seed, so all share initial samples and
    Brownian paths replica by replica.
    """
    rows: List[CostStudyRow] = []
    for sizes in batch_configurations:
        configured = spec.with_batch_sizes(sizes)
        ensure_valid(configured.with_step(min(tau_list)))
        series = run_coupled(configured, seed, tau_list, ref_refinement, replicas, workers=workers)
        counts = closed_form_counts(configured)
        for point in series.points:
            steps = round(configured.end_time / point.tau)
            rows.append(CostStudyRow(
                batch_sizes=tuple(int(p) for p in sizes),
                theta=theta(configured),
                tau=point.tau,
                mean_error=point.mean_error,
                std_error=point.std_error,
                rbm_evaluations=counts.rbm_per_step * steps * configured.substeps,
                reference_evaluations=counts.full_per_step * steps * 2 ** ref_refinement,
            ))
        logger.get_logger().info(f"Batch sizes {tuple(sizes)}: theta={theta(configured):g}")
    return rows
