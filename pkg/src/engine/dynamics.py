"""
Full and random-batch drifts, the remainder chi and Euler-Maruyama runs.

Species and particle indices are 0-based. Batched pair sums are evaluated on
arrays of shape (batches, targets, sources, d); the full interaction is the
single-batch case of the same code path, so a partition with p_i = N_i for all
species reproduces the full dynamics bit for bit.
"""

import math
import time
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import BlowUpError, ConfigurationError, InvalidStateError
from ..core.logger import logger
from ..core.replicas import replica_streams
from ..model.kernels import KernelSpec
from ..model.system import SystemSpec
from .batching import CoefficientTable, Partition, interaction_coefficients, sample_partition

# Upper bound on elements of one (batches, targets, sources, d) work array
PAIR_CHUNK_ELEMENTS = 1 << 22

METHOD_FULL = "full"
METHOD_RBM = "rbm"

Positions = Tuple[np.ndarray, ...]
DriftField = Callable[[Positions, Optional[Partition]], Positions]


@dataclass(frozen=True)
class ParticleState:
    """Positions X_i^k (one (N_i, d) array per species) at time t"""
    positions: Positions
    time: float = 0.0

    @property
    def n_species(self) -> int:
        return len(self.positions)

    def first_non_finite(self) -> Optional[Tuple[int, int]]:
        for i, block in enumerate(self.positions):
            bad = ~np.all(np.isfinite(block), axis=-1)
            if bad.any():
                return i, int(np.argmax(bad))
        return None

    def to_dict(self) -> dict:
        return {"time": self.time, "positions": [block.tolist() for block in self.positions]}


@dataclass(frozen=True)
class NoiseIncrements:
    """Brownian increments Delta B_i^k ~ N(0, dt I_d) per species"""
    increments: Positions
    dt: float


@dataclass
class EvaluationCounter:
    """Running count of pairwise kernel evaluations, owned by one run"""
    count: int = 0

    def add(self, evaluations: int) -> None:
        self.count += evaluations


@dataclass
class Trajectory:
    """Snapshots at the record times; the first one is the initial condition"""
    snapshots: List[ParticleState] = field(default_factory=list)
    metadata: Dict = field(default_factory=dict)

    @property
    def times(self) -> List[float]:
        return [s.time for s in self.snapshots]

    @property
    def final(self) -> ParticleState:
        return self.snapshots[-1]

    def append(self, state: ParticleState) -> None:
        if self.snapshots and state.time <= self.snapshots[-1].time:
            raise InvalidStateError(
                f"record times must increase: {state.time} after {self.snapshots[-1].time}"
            )
        self.snapshots.append(state)


def pair_sums(
    kernel: KernelSpec,
    targets: np.ndarray,
    sources: np.ndarray,
    exclude_self: bool,
    counter: Optional[EvaluationCounter] = None,
) -> np.ndarray:
    """
    sum_l K(targets[r, a] - sources[r, l]) for every batch r and target a.

    Args:
        kernel: K_ij
        targets: (R, m, d) positions of the target particles
        sources: (R, s, d) positions of the source particles
        exclude_self: Targets and sources are the same particles; drop l == a

    Returns:
        (R, m, d) array of sums
    """
    batches, m, d = targets.shape
    s = sources.shape[1]
    if counter is not None:
        counter.add(batches * m * s - (batches * m if exclude_self else 0))
    out = np.zeros_like(targets, dtype=float)
    if kernel.is_zero or s == 0:
        return out
    rows = max(1, PAIR_CHUNK_ELEMENTS // max(1, batches * s * d))
    for start in range(0, m, rows):
        stop = min(m, start + rows)
        diff = targets[:, start:stop, None, :] - sources[:, None, :, :]
        values = kernel.evaluate(diff)
        if exclude_self:
            local = np.arange(stop - start)
            values[:, local, local + start, :] = 0.0
        out[:, start:stop, :] = values.sum(axis=2)
    return out


def full_drift_field(
    spec: SystemSpec, coefficients: CoefficientTable, counter: Optional[EvaluationCounter] = None
) -> DriftField:
    """-grad V_i(X_i^k) + sum_j alpha_ij sum_{(j,l) != (i,k)} K_ij(X_i^k - X_j^l), all particles"""

    def drift(positions: Positions, partition: Optional[Partition] = None) -> Positions:
        result = []
        for i, species in enumerate(spec.species):
            x = positions[i]
            value = -species.potential.gradient(x)
            for j in range(spec.n_species):
                sums = pair_sums(spec.kernels[i][j], x[None], positions[j][None], i == j, counter)
                value = value + coefficients.alpha[i, j] * sums[0]
            result.append(value)
        return tuple(result)

    return drift


def rbm_drift_field(
    spec: SystemSpec, coefficients: CoefficientTable, counter: Optional[EvaluationCounter] = None
) -> DriftField:
    """Batched drift: each particle sees only its super-batch, weighted by beta"""

    def drift(positions: Positions, partition: Optional[Partition] = None) -> Positions:
        if partition is None:
            raise InvalidStateError("random-batch drift needs a partition")
        result = []
        for i, species in enumerate(spec.species):
            x = positions[i]
            value = -species.potential.gradient(x)
            rows_i = partition.members[i]
            for j in range(spec.n_species):
                shared = min(rows_i.shape[0], partition.members[j].shape[0])
                targets = rows_i[:shared]
                sources = partition.members[j][:shared]
                sums = pair_sums(spec.kernels[i][j], x[targets], positions[j][sources], i == j, counter)
                update = value[targets] + coefficients.beta[i, j] * sums
                value[targets] = update
            result.append(value)
        return tuple(result)

    return drift


def _interaction_terms(
    spec: SystemSpec, positions: Positions, i: int, k: int, j: int, counter: Optional[EvaluationCounter]
) -> np.ndarray:
    """K_ij(X_i^k - X_j^l) for every l, with the self term zeroed"""
    x = positions[i][k]
    values = spec.kernels[i][j].evaluate(x[None, :] - positions[j])
    if i == j:
        values[k] = 0.0
    if counter is not None:
        counter.add(positions[j].shape[0] - (1 if i == j else 0))
    return values


def _check_index(spec: SystemSpec, positions: Positions, i: int, k: int) -> None:
    if not 0 <= i < spec.n_species:
        raise IndexError(f"species index {i} outside 0..{spec.n_species - 1}")
    if not 0 <= k < positions[i].shape[0]:
        raise IndexError(f"particle index {k} outside 0..{positions[i].shape[0] - 1}")


def _finite_or_blow_up(value: np.ndarray, i: int, k: int, t: float) -> np.ndarray:
    if not np.all(np.isfinite(value)):
        raise BlowUpError(i, k, t)
    return value


def full_drift(
    spec: SystemSpec,
    state: ParticleState,
    coefficients: CoefficientTable,
    i: int,
    k: int,
    counter: Optional[EvaluationCounter] = None,
) -> np.ndarray:
    """Full drift of one particle (i, k)"""
    positions = state.positions
    _check_index(spec, positions, i, k)
    value = -spec.species[i].potential.gradient(positions[i][k])
    for j in range(spec.n_species):
        terms = _interaction_terms(spec, positions, i, k, j, counter)
        value = value + coefficients.alpha[i, j] * terms.sum(axis=0)
    return _finite_or_blow_up(value, i, k, state.time)


def rbm_drift(
    spec: SystemSpec,
    state: ParticleState,
    partition: Partition,
    coefficients: CoefficientTable,
    i: int,
    k: int,
    counter: Optional[EvaluationCounter] = None,
) -> np.ndarray:
    """Random-batch drift of one particle; empty batches C_{j,r} contribute zero"""
    positions = state.positions
    _check_index(spec, positions, i, k)
    r = partition.label(i, k)
    value = -spec.species[i].potential.gradient(positions[i][k])
    for j in range(spec.n_species):
        batch = partition.batch(j, r)
        if batch.size == 0:
            continue
        x = positions[i][k]
        values = spec.kernels[i][j].evaluate(x[None, :] - positions[j][batch])
        if i == j:
            values[batch == k] = 0.0
        if counter is not None:
            counter.add(batch.size - (1 if i == j else 0))
        value = value + coefficients.beta[i, j] * values.sum(axis=0)
    return _finite_or_blow_up(value, i, k, state.time)


class RemainderTerms:
    """
    Pair terms K_ij(x_i^k - x_j^l) of one particle, evaluated once.

    evaluate() returns chi_i^k for a given partition:
    sum_j beta_ij sum_{l in C_{j,r}} K - alpha_ij sum_l K, the self term excluded.
    """

    def __init__(self, spec: SystemSpec, positions: Positions, i: int, k: int):
        _check_index(spec, positions, i, k)
        self.i = i
        self.k = k
        self.terms = [_interaction_terms(spec, positions, i, k, j, None) for j in range(spec.n_species)]
        self.totals = [block.sum(axis=0) for block in self.terms]

    def evaluate(self, partition: Partition, coefficients: CoefficientTable) -> np.ndarray:
        r = partition.label(self.i, self.k)
        value = np.zeros_like(self.totals[0])
        for j, block in enumerate(self.terms):
            in_batch = partition.assignments[j] == r
            value += coefficients.beta[self.i, j] * block[in_batch].sum(axis=0) - coefficients.alpha[self.i, j] * self.totals[j]
        return value


def chi(
    spec: SystemSpec,
    positions: Positions,
    partition: Partition,
    coefficients: CoefficientTable,
    i: int,
    k: int,
) -> np.ndarray:
    """Interaction-only remainder chi_i^k = (batched force) - (full force)"""
    return RemainderTerms(spec, positions, i, k).evaluate(partition, coefficients)


def sample_noise(rng: np.random.Generator, spec: SystemSpec, dt: Optional[float] = None) -> NoiseIncrements:
    """
    Brownian increments for one step: sqrt(dt) * standard normal (ziggurat).

    Species are filled in order, each as an (N_i, d) block.
    """
    step = spec.step if dt is None else dt
    scale = math.sqrt(step)
    return NoiseIncrements(
        increments=tuple(scale * rng.standard_normal((s.particle_count, spec.dimension)) for s in spec.species),
        dt=step,
    )


def sample_initial_state(spec: SystemSpec, rng: np.random.Generator) -> ParticleState:
    return ParticleState(
        positions=tuple(
            s.initial.sample(rng, s.particle_count, spec.dimension) for s in spec.species
        ),
        time=0.0,
    )


def em_step(
    spec: SystemSpec,
    state: ParticleState,
    drift_fn: DriftField,
    partition: Optional[Partition],
    noise: NoiseIncrements,
    step_index: Optional[int] = None,
) -> ParticleState:
    """
    One Euler-Maruyama step of length noise.dt.

    X <- X + drift dt + sigma(X) dB, sigma evaluated at the pre-step state.
    With spec.noise_as_drift the noise term is the deterministic sigma dt.

    Raises:
        BlowUpError: Non-finite drift or updated position
    """
    dt = noise.dt
    drifts = drift_fn(state.positions, partition)
    for i, value in enumerate(drifts):
        bad = ~np.all(np.isfinite(value), axis=-1)
        if bad.any():
            raise BlowUpError(i, int(np.argmax(bad)), state.time, step_index)
    updated = []
    for i, species in enumerate(spec.species):
        x = state.positions[i]
        sigma = species.diffusion.evaluate(x)
        if not species.diffusion.is_additive:
            sigma = sigma[:, None]
        if spec.noise_as_drift:
            updated.append(x + drifts[i] * dt + sigma * dt)
        else:
            updated.append(x + drifts[i] * dt + sigma * noise.increments[i])
    new_state = ParticleState(positions=tuple(updated), time=state.time + dt)
    bad = new_state.first_non_finite()
    if bad is not None:
        raise BlowUpError(bad[0], bad[1], new_state.time, step_index)
    return new_state


def _record_steps(spec: SystemSpec, record_times: Optional[Sequence[float]]) -> Dict[int, float]:
    """Map each requested record time to the first grid step at or after it"""
    steps = spec.step_sizes()
    grid = [0.0]
    for m in range(1, len(steps)):
        grid.append(m * spec.step)
    grid.append(spec.end_time)
    requested = [spec.end_time] if record_times is None else list(record_times)
    chosen: Dict[int, float] = {}
    for t in requested:
        if t < 0 or t > spec.end_time * (1 + 1e-12):
            raise ConfigurationError(f"record time {t} outside [0, {spec.end_time}]", location="run.record_times")
        m = next(index for index, g in enumerate(grid) if g >= t - 1e-12 * max(1.0, spec.end_time))
        chosen[m] = grid[m]
    chosen.pop(0, None)
    return chosen


def _simulate(
    spec: SystemSpec,
    seed: int,
    method: str,
    record_times: Optional[Sequence[float]],
    replica: int,
    legacy_beta: bool,
    initial: Optional[ParticleState] = None,
) -> Trajectory:
    streams = replica_streams(seed, replica)
    coefficients = interaction_coefficients(spec, legacy_beta=legacy_beta)
    counter = EvaluationCounter()
    if method == METHOD_FULL:
        drift_fn = full_drift_field(spec, coefficients, counter)
    else:
        drift_fn = rbm_drift_field(spec, coefficients, counter)

    state = initial if initial is not None else sample_initial_state(spec, streams.init)
    record = _record_steps(spec, record_times)
    trajectory = Trajectory(
        metadata={
            "seed": seed,
            "replica": replica,
            "method": method,
            "spec_hash": spec.spec_hash(),
            "legacy_beta": legacy_beta,
        }
    )
    trajectory.append(state)
    started = time.perf_counter()
    grid_time = 0.0
    for m, dt in enumerate(spec.step_sizes(), start=1):
        partition = sample_partition(spec, streams.batch) if method == METHOD_RBM else None
        h = dt / spec.substeps
        for _ in range(spec.substeps):
            noise = sample_noise(streams.noise, spec, h)
            state = em_step(spec, state, drift_fn, partition, noise, step_index=m)
        grid_time = spec.end_time if m == spec.step_count else m * spec.step
        state = ParticleState(positions=state.positions, time=grid_time)
        if m in record:
            trajectory.append(state)
    trajectory.metadata["kernel_evaluations"] = counter.count
    trajectory.metadata["steps"] = spec.step_count
    trajectory.metadata["wall_time"] = time.perf_counter() - started
    logger.get_logger().debug(
        f"{method} replica {replica}: {spec.step_count} steps, {counter.count} kernel evaluations"
    )
    return trajectory


def run_full(
    spec: SystemSpec,
    seed: int,
    record_times: Optional[Sequence[float]] = None,
    replica: int = 0,
    initial: Optional[ParticleState] = None,
) -> Trajectory:
    """Full-interaction Euler-Maruyama run from the replica's streams"""
    return _simulate(spec, seed, METHOD_FULL, record_times, replica, False, initial)


def run_rbm(
    spec: SystemSpec,
    seed: int,
    record_times: Optional[Sequence[float]] = None,
    replica: int = 0,
    legacy_beta: bool = False,
    initial: Optional[ParticleState] = None,
) -> Trajectory:
    """Random-batch run: a fresh partition per batch interval, then substeps EM steps"""
    return _simulate(spec, seed, METHOD_RBM, record_times, replica, legacy_beta, initial)
