"""
System specification: species, kernel matrix, time grid and structural validation.
"""

import hashlib
import json
import math
from dataclasses import dataclass, replace
from typing import List, Sequence, Tuple, Union

import numpy as np

from ..core.exceptions import ConfigurationError
from ..core.logger import logger
from .diffusion import DiffusionSpec
from .kernels import KernelSpec
from .potentials import PotentialForm, PotentialSpec

# Relative tolerance under which a final partial step is snapped to a full step
STEP_SNAP_RTOL = 1e-12


@dataclass(frozen=True)
class GaussianInit:
    """i.i.d. N(mean, variance * I) samples"""
    mean: Tuple[float, ...]
    variance: float

    def sample(self, rng: np.random.Generator, count: int, dimension: int) -> np.ndarray:
        center = np.asarray(self.mean, dtype=float)
        return center + math.sqrt(self.variance) * rng.standard_normal((count, dimension))

    def to_dict(self) -> dict:
        return {"kind": "gaussian", "mean": list(self.mean), "variance": self.variance}


@dataclass(frozen=True)
class UniformInit:
    """i.i.d. samples uniform on the cube [lo, hi]^d"""
    lo: float
    hi: float

    def sample(self, rng: np.random.Generator, count: int, dimension: int) -> np.ndarray:
        return rng.uniform(self.lo, self.hi, size=(count, dimension))

    def to_dict(self) -> dict:
        return {"kind": "uniform", "lo": self.lo, "hi": self.hi}


@dataclass(frozen=True)
class PointCloudInit:
    """Explicit positions; the random stream is not consumed"""
    positions: Tuple[Tuple[float, ...], ...]

    def sample(self, rng: np.random.Generator, count: int, dimension: int) -> np.ndarray:
        return np.array(self.positions, dtype=float).reshape(count, dimension)

    def to_dict(self) -> dict:
        return {"kind": "points", "positions": [list(p) for p in self.positions]}


InitialDistribution = Union[GaussianInit, UniformInit, PointCloudInit]


@dataclass(frozen=True)
class SpeciesSpec:
    """One species: N_i particles split into b_i = N_i / p_i batches of size p_i"""
    index: int
    particle_count: int
    batch_size: int
    diffusion: DiffusionSpec
    potential: PotentialSpec
    initial: InitialDistribution

    @property
    def batch_count(self) -> int:
        return self.particle_count // self.batch_size

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "particle_count": self.particle_count,
            "batch_size": self.batch_size,
            "diffusion": self.diffusion.to_dict(),
            "potential": self.potential.to_dict(),
            "initial": self.initial.to_dict(),
        }


@dataclass(frozen=True)
class SystemSpec:
    """
    Complete problem definition.

    `species` holds n entries with 1-based ids 1..n; `kernels[i][j]` is K_ij
    with 0-based positions. `substeps` Euler-Maruyama steps share one batch
    partition per interval of length `step`.
    """
    dimension: int
    species: Tuple[SpeciesSpec, ...]
    kernels: Tuple[Tuple[KernelSpec, ...], ...]
    end_time: float
    step: float
    noise_as_drift: bool = False
    substeps: int = 1

    @property
    def n_species(self) -> int:
        return len(self.species)

    @property
    def particle_counts(self) -> Tuple[int, ...]:
        return tuple(s.particle_count for s in self.species)

    @property
    def batch_sizes(self) -> Tuple[int, ...]:
        return tuple(s.batch_size for s in self.species)

    @property
    def batch_counts(self) -> Tuple[int, ...]:
        return tuple(s.batch_count for s in self.species)

    @property
    def total_particles(self) -> int:
        return sum(self.particle_counts)

    @property
    def step_count(self) -> int:
        """M = ceil(T / tau)"""
        return max(1, math.ceil(self.end_time / self.step - 1e-9))

    def step_sizes(self) -> List[float]:
        """Batch-interval lengths; the last one is clipped so the grid ends at T"""
        count = self.step_count
        last = self.end_time - (count - 1) * self.step
        if abs(last - self.step) <= STEP_SNAP_RTOL * self.step:
            last = self.step
        return [self.step] * (count - 1) + [last]

    def with_step(self, step: float) -> "SystemSpec":
        return replace(self, step=float(step))

    def with_end_time(self, end_time: float) -> "SystemSpec":
        return replace(self, end_time=float(end_time))

    def with_batch_sizes(self, batch_sizes: Sequence[int]) -> "SystemSpec":
        if len(batch_sizes) != self.n_species:
            raise ConfigurationError(
                f"expected {self.n_species} batch sizes, got {len(batch_sizes)}", location="run.batch_sizes"
            )
        species = tuple(replace(s, batch_size=int(p)) for s, p in zip(self.species, batch_sizes))
        return replace(self, species=species)

    def with_particle_counts(self, particle_counts: Sequence[int]) -> "SystemSpec":
        if len(particle_counts) != self.n_species:
            raise ConfigurationError(
                f"expected {self.n_species} particle counts, got {len(particle_counts)}",
                location="run.particle_counts",
            )
        species = tuple(replace(s, particle_count=int(n)) for s, n in zip(self.species, particle_counts))
        return replace(self, species=species)

    def with_full_batches(self) -> "SystemSpec":
        """p_i = N_i for every species (one batch holding everything)"""
        return self.with_batch_sizes(self.particle_counts)

    def to_dict(self) -> dict:
        return {
            "dimension": self.dimension,
            "end_time": self.end_time,
            "step": self.step,
            "noise_as_drift": self.noise_as_drift,
            "substeps": self.substeps,
            "species": [s.to_dict() for s in self.species],
            "kernels": [[k.to_dict() for k in row] for row in self.kernels],
        }

    def spec_hash(self) -> str:
        """Short content hash recorded in trajectory metadata"""
        text = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.md5(text.encode("utf-8")).hexdigest()[:8]


@dataclass(frozen=True)
class Diagnostic:
    level: str  # "error" | "warning"
    location: str
    message: str

    @property
    def is_error(self) -> bool:
        return self.level == "error"

    def __str__(self) -> str:
        return f"{self.level}: {self.location}: {self.message}"


def _check_species(spec: SystemSpec, position: int, species: SpeciesSpec) -> List[Diagnostic]:
    where = f"species.{position + 1}"
    found: List[Diagnostic] = []

    def error(key: str, message: str) -> None:
        found.append(Diagnostic("error", f"{where}.{key}", message))

    if species.index != position + 1:
        error("index", f"species id {species.index} does not match its position {position + 1}")
    if species.particle_count < 1:
        error("particle_count", f"particle count must be positive, got {species.particle_count}")
    if species.batch_size < 2:
        error("batch_size", f"batch size must be at least 2, got {species.batch_size}")
    elif species.particle_count >= 1 and species.particle_count % species.batch_size != 0:
        error(
            "batch_size",
            f"batch size must divide particle count (p={species.batch_size}, N={species.particle_count})",
        )

    d = spec.dimension
    init = species.initial
    if isinstance(init, GaussianInit):
        if len(init.mean) != d:
            error("mean", f"initial mean has {len(init.mean)} components, dimension is {d}")
        if not init.variance >= 0:
            error("variance", f"initial variance must be non-negative, got {init.variance}")
    elif isinstance(init, UniformInit):
        if not init.lo < init.hi:
            error("uniform", f"uniform initial range needs lo < hi, got [{init.lo}, {init.hi}]")
    elif isinstance(init, PointCloudInit):
        shape = np.array(init.positions, dtype=float).shape
        if shape != (species.particle_count, d):
            error("positions", f"point cloud has shape {shape}, expected ({species.particle_count}, {d})")

    diffusion = species.diffusion
    if diffusion.is_additive and not diffusion.sigma >= 0:
        error("sigma", f"additive diffusion must be non-negative, got {diffusion.sigma}")

    potential = species.potential
    if potential.form == PotentialForm.QUADRATIC_WELL and len(potential.center) != d:
        error("center", f"potential center has {len(potential.center)} components, dimension is {d}")
    return found


def _assumption_warnings(spec: SystemSpec) -> List[Diagnostic]:
    """Strong-convexity inequalities on the declared constants (warnings only)"""
    found: List[Diagnostic] = []
    n = spec.n_species
    for i, species in enumerate(spec.species):
        r = species.potential.convexity_r
        pairs = [(spec.kernels[i][j].lipschitz, spec.kernels[j][i].lipschitz) for j in range(n)]
        if r is None or any(a is None or b is None for a, b in pairs):
            continue
        coupling = 2.0 * sum(max(a, b) for a, b in pairs)
        where = f"species.{i + 1}.potential"
        diffusion = species.diffusion
        if diffusion.is_additive:
            if not r > coupling:
                found.append(Diagnostic(
                    "warning", where,
                    f"strong convexity condition fails: r_{i + 1} = {r:g} <= "
                    f"2 * sum_j max(L_{i + 1}j, L_j{i + 1}) = {coupling:g}",
                ))
            continue
        lip = diffusion.lipschitz
        if lip is None:
            continue
        d = spec.dimension
        bound = coupling + lip * lip * d
        if not r > bound:
            found.append(Diagnostic(
                "warning", where,
                f"strong convexity condition fails: r_{i + 1} = {r:g} <= "
                f"2 * sum_j max(L_{i + 1}j, L_j{i + 1}) + L_{i + 1}^2 d = {bound:g}",
            ))
        q = species.potential.growth_q
        moment_bound = 2.0 * lip * lip * (2.0 * max(1.0, q) + d - 2.0)
        if not r > moment_bound:
            found.append(Diagnostic(
                "warning", where,
                f"moment condition fails: r_{i + 1} = {r:g} <= "
                f"2 L_{i + 1}^2 (2 max(1, q_{i + 1}) + d - 2) = {moment_bound:g}",
            ))
    return found


def validate_system(spec: SystemSpec) -> List[Diagnostic]:
    """
    Check structural requirements and the declared-constant assumptions.

    Returns:
        Errors first, then warnings; an identical spec gives identical output
    """
    errors: List[Diagnostic] = []
    if spec.dimension < 1:
        errors.append(Diagnostic("error", "system.dimension", f"dimension must be at least 1, got {spec.dimension}"))
    if spec.n_species < 1:
        errors.append(Diagnostic("error", "system.species", "at least one species is required"))
    if not spec.end_time > 0:
        errors.append(Diagnostic("error", "system.end_time", f"end time must be positive, got {spec.end_time}"))
    if not spec.step > 0:
        errors.append(Diagnostic("error", "run.tau", f"step size must be positive, got {spec.step}"))
    if spec.substeps < 1:
        errors.append(Diagnostic("error", "run.substeps", f"substeps must be at least 1, got {spec.substeps}"))

    n = spec.n_species
    if len(spec.kernels) != n or any(len(row) != n for row in spec.kernels):
        shape = f"{len(spec.kernels)}x{[len(row) for row in spec.kernels]}"
        errors.append(Diagnostic("error", "kernel", f"kernel matrix must be {n}x{n}, got {shape}"))

    if spec.dimension >= 1:
        for position, species in enumerate(spec.species):
            errors.extend(_check_species(spec, position, species))

    if errors:
        return errors
    return _assumption_warnings(spec)


def ensure_valid(spec: SystemSpec) -> List[Diagnostic]:
    """
    Validate and raise on structural errors; log assumption warnings.

    Raises:
        ConfigurationError: Carries all diagnostics, message from the first error
    """
    diagnostics = validate_system(spec)
    errors = [d for d in diagnostics if d.is_error]
    if errors:
        first = errors[0]
        raise ConfigurationError(first.message, diagnostics=diagnostics, location=first.location)
    log = logger.get_logger()
    for diagnostic in diagnostics:
        log.warning(f"{diagnostic.location}: {diagnostic.message}")
    return diagnostics
