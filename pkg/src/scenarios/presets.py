"""
Pinned experiment presets and command-line overrides.

Presets fix every published parameter. Without --force only the replica
count, the seed and (for test3) the particle counts from the published list
may change.
"""

from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Sequence, Tuple

from ..core.exceptions import ConfigurationError
from ..core.logger import logger
from ..core.messages import Overrides
from ..model.diffusion import DiffusionSpec
from ..model.kernels import KernelSpec
from ..model.potentials import PotentialSpec
from ..model.system import GaussianInit, SpeciesSpec, SystemSpec, UniformInit

CHECK_CONVERGENCE = "convergence_slope"
CHECK_CONSISTENCY = "consistency"
CHECK_COST_RATIO = "cost_ratio"
CHECK_SEGREGATION = "segregation"
CHECK_OPINION = "opinion_clusters"


@dataclass(frozen=True)
class SweepParameters:
    """Error-versus-cost study over several batch-size configurations"""
    batch_configurations: Tuple[Tuple[int, ...], ...]
    tau_list: Tuple[float, ...]
    end_time: float
    ref_refinement: int = 2


@dataclass(frozen=True)
class RunParameters:
    tau_list: Tuple[float, ...] = ()
    replicas: int = 1
    seed: int = 0
    record_times: Tuple[float, ...] = ()
    ref_refinement: int = 2
    # reference step sizes as listed with the experiment (kept for the record)
    reference_tau_list: Tuple[float, ...] = ()


@dataclass(frozen=True)
class Scenario:
    name: str
    spec: SystemSpec
    run: RunParameters = field(default_factory=RunParameters)
    sweep: Optional[SweepParameters] = None
    checks: Tuple[str, ...] = ()
    particle_count_options: Tuple[Tuple[int, ...], ...] = ()
    pinned: bool = False

    def to_dict(self) -> dict:
        data = {
            "name": self.name,
            "system": self.spec.to_dict(),
            "run": {
                "tau": list(self.run.tau_list),
                "replicas": self.run.replicas,
                "seed": self.run.seed,
                "record_times": list(self.run.record_times),
                "ref_refinement": self.run.ref_refinement,
                "reference_tau": list(self.run.reference_tau_list),
            },
            "checks": list(self.checks),
            "particle_count_options": [list(option) for option in self.particle_count_options],
        }
        if self.sweep is not None:
            data["sweep"] = {
                "batch_sizes": [list(c) for c in self.sweep.batch_configurations],
                "tau": list(self.sweep.tau_list),
                "end_time": self.sweep.end_time,
                "ref_refinement": self.sweep.ref_refinement,
            }
        return data


def _powers_of_two(first: int, last: int) -> Tuple[float, ...]:
    """(2^-first, ..., 2^-last)"""
    return tuple(2.0 ** -e for e in range(first, last + 1))


def _cauchy_kernels(charges: Sequence[float]) -> Tuple[Tuple[KernelSpec, ...], ...]:
    return tuple(tuple(KernelSpec.scaled_cauchy(qi, qj) for qj in charges) for qi in charges)


def _well_species(
    counts: Sequence[int],
    sizes: Sequence[int],
    sigma: float,
    rates: Sequence[float],
    centers: Sequence[Tuple[float, float]],
    variances: Sequence[float],
) -> Tuple[SpeciesSpec, ...]:
    return tuple(
        SpeciesSpec(
            index=i + 1,
            particle_count=counts[i],
            batch_size=sizes[i],
            diffusion=DiffusionSpec.additive(sigma),
            potential=PotentialSpec.quadratic_well(rates[i], centers[i]),
            initial=GaussianInit(mean=(0.0, 0.0), variance=float(variances[i])),
        )
        for i in range(len(counts))
    )


TEST3_PARTICLE_COUNTS = ((100, 100, 200), (1000, 1000, 2000), (2500, 2500, 5000))
TEST3_CHARGES = (-1.0, 2.0, -2.0)
TEST3_RATES = (1.0, 4.0, 2.0)
TEST3_CENTERS = ((1.0, 0.0), (-1.0, -1.0), (1.0, 1.0))
TEST3_VARIANCES = (2.0, 2.0, 1.0)


def _test3() -> Scenario:
    taus = _powers_of_two(2, 6)
    spec = SystemSpec(
        dimension=2,
        species=_well_species(TEST3_PARTICLE_COUNTS[0], (2, 2, 2), 0.5, TEST3_RATES, TEST3_CENTERS, TEST3_VARIANCES),
        kernels=_cauchy_kernels(TEST3_CHARGES),
        end_time=1.0,
        step=taus[-1],
    )
    return Scenario(
        name="test3",
        spec=spec,
        run=RunParameters(
            tau_list=taus, replicas=10, seed=1, ref_refinement=2, reference_tau_list=_powers_of_two(4, 8)
        ),
        checks=(CHECK_CONVERGENCE,),
        particle_count_options=TEST3_PARTICLE_COUNTS,
    )


def _test2_cost() -> Scenario:
    taus = _powers_of_two(3, 7)
    spec = SystemSpec(
        dimension=2,
        species=_well_species((1250, 1250), (2, 2), 0.0, TEST3_RATES[:2], TEST3_CENTERS[:2], TEST3_VARIANCES[:2]),
        kernels=_cauchy_kernels(TEST3_CHARGES[:2]),
        end_time=1.0,
        step=taus[-1],
    )
    return Scenario(
        name="test2_cost",
        spec=spec,
        run=RunParameters(
            tau_list=taus, replicas=1, seed=1, ref_refinement=2, reference_tau_list=_powers_of_two(1, 5)
        ),
        checks=(CHECK_COST_RATIO,),
        particle_count_options=((1250, 1250), (2500, 2500), (5000, 5000)),
    )


def _oracle(name: str, counts: Tuple[int, int]) -> Scenario:
    spec = SystemSpec(
        dimension=2,
        species=_well_species(counts, (2, 2), 0.5, TEST3_RATES[:2], TEST3_CENTERS[:2], TEST3_VARIANCES[:2]),
        kernels=_cauchy_kernels(TEST3_CHARGES[:2]),
        end_time=1.0,
        step=0.25,
    )
    return Scenario(
        name=name,
        spec=spec,
        run=RunParameters(tau_list=(0.25,), replicas=1, seed=3),
        checks=(CHECK_CONSISTENCY,),
    )


POPULATION_STRENGTH = ((0.0, 355.0, 355.0), (25.0, 0.0, 25.0), (355.0, 0.0, 0.0))
POPULATION_ETA = 2.0
# Segregating (repulsive) orientation: each species climbs down the bumps of the others
POPULATION_ORIENTATION = -1.0


def _population3() -> Scenario:
    means = (-1.0, 2.0, 3.0)
    sigmas = (1.0, 2.0, 3.0)
    species = tuple(
        SpeciesSpec(
            index=i + 1,
            particle_count=5000,
            batch_size=20,
            diffusion=DiffusionSpec.additive(sigmas[i]),
            potential=PotentialSpec.none(),
            initial=GaussianInit(mean=(means[i],), variance=2.0),
        )
        for i in range(3)
    )
    kernels = tuple(
        tuple(
            KernelSpec.bump_gradient(d, POPULATION_ETA, POPULATION_ORIENTATION) if d else KernelSpec.zero()
            for d in row
        )
        for row in POPULATION_STRENGTH
    )
    spec = SystemSpec(dimension=1, species=species, kernels=kernels, end_time=2.0, step=0.01)
    return Scenario(
        name="population3",
        spec=spec,
        run=RunParameters(tau_list=(0.01,), replicas=1000, seed=2),
        sweep=SweepParameters(
            batch_configurations=((2, 2, 2), (10, 10, 10), (100, 100, 100), (1000, 1000, 1000)),
            tau_list=_powers_of_two(1, 7),
            end_time=1.0,
            ref_refinement=2,
        ),
        checks=(CHECK_SEGREGATION, CHECK_COST_RATIO),
    )


OPINION_RADII = (1.0, 2.5, 5.0)


def opinion_strengths(manager_submission: float) -> Tuple[Tuple[float, ...], ...]:
    """Influence matrix: workers listen to workers and managers, managers to CEOs, CEOs to CEOs"""
    return ((5.0, 10.0, 0.0), (0.0, 0.0, manager_submission), (0.0, 0.0, 0.1))


def _opinion_spec(
    counts: Sequence[int], sizes: Sequence[int], manager_submission: float, end_time: float, step: float
) -> SystemSpec:
    species = tuple(
        SpeciesSpec(
            index=i + 1,
            particle_count=counts[i],
            batch_size=sizes[i],
            diffusion=DiffusionSpec.additive(0.1),
            potential=PotentialSpec.none(),
            initial=UniformInit(lo=0.0, hi=10.0),
        )
        for i in range(3)
    )
    kernels = tuple(
        tuple(
            KernelSpec.opinion(d, OPINION_RADII[j]) if d else KernelSpec.zero()
            for j, d in enumerate(row)
        )
        for row in opinion_strengths(manager_submission)
    )
    return SystemSpec(dimension=1, species=species, kernels=kernels, end_time=end_time, step=step)


def _opinion(name: str, manager_submission: float) -> Scenario:
    return Scenario(
        name=name,
        spec=_opinion_spec((5000, 10, 2), (20, 2, 2), manager_submission, 5.0, 1e-5),
        run=RunParameters(tau_list=(1e-5,), replicas=1, seed=7, record_times=(0.0, 1.0, 2.0, 3.0, 4.0, 5.0)),
        checks=(CHECK_OPINION,),
    )


def _opinion_batch() -> Scenario:
    taus = _powers_of_two(3, 7)
    return Scenario(
        name="opinion_batch",
        spec=_opinion_spec((10000, 100, 10), (20, 5, 2), 25.0, 4.0, taus[-1]),
        run=RunParameters(tau_list=taus, replicas=1, seed=7, ref_refinement=2),
        sweep=SweepParameters(
            batch_configurations=((2, 2, 2), (20, 5, 2), (200, 20, 2), (2000, 20, 2)),
            tau_list=taus,
            end_time=4.0,
            ref_refinement=2,
        ),
        checks=(CHECK_COST_RATIO,),
    )


_BUILDERS: Dict[str, Callable[[], Scenario]] = {
    "test3": _test3,
    "population3": _population3,
    "opinion_submissive": lambda: _opinion("opinion_submissive", 25.0),
    "opinion_obedient": lambda: _opinion("opinion_obedient", 1.0),
    "test2_cost": _test2_cost,
    "opinion_batch": _opinion_batch,
    "oracle2_equal": lambda: _oracle("oracle2_equal", (4, 4)),
    "oracle2_unequal": lambda: _oracle("oracle2_unequal", (4, 6)),
}


def list_presets() -> List[str]:
    return list(_BUILDERS)


def preset(name: str) -> Scenario:
    """
    Build a pinned preset scenario.

    Raises:
        ConfigurationError: Unknown preset name
    """
    builder = _BUILDERS.get(name)
    if builder is None:
        raise ConfigurationError(f"unknown preset '{name}' (available: {', '.join(_BUILDERS)})", location="preset")
    return replace(builder(), pinned=True)


def _check_values(overrides: Overrides) -> None:
    """Reject malformed override values before any pinning rules apply"""
    if overrides.tau is not None:
        if not overrides.tau:
            raise ConfigurationError("at least one step size is required", location="run.tau")
        for tau in overrides.tau:
            if not tau > 0:
                raise ConfigurationError(f"step size must be positive, got {tau:g}", location="run.tau")
    if overrides.end_time is not None and not overrides.end_time > 0:
        raise ConfigurationError(f"end time must be positive, got {overrides.end_time:g}", location="system.end_time")
    if overrides.replicas is not None and overrides.replicas < 1:
        raise ConfigurationError(f"replica count must be positive, got {overrides.replicas}", location="run.replicas")
    if overrides.seed is not None and overrides.seed < 0:
        raise ConfigurationError(f"seed must be non-negative, got {overrides.seed}", location="run.seed")
    if overrides.ref_refinement is not None and overrides.ref_refinement < 0:
        raise ConfigurationError(
            f"reference refinement must be >= 0, got {overrides.ref_refinement}", location="run.ref_refinement"
        )


def apply_overrides(scenario: Scenario, overrides: Overrides, force: bool = False) -> Scenario:
    """
    Apply overrides; pinned presets refuse changes to published values unless forced.

    Raises:
        ConfigurationError: Invalid value, or a pinned value changed without force
    """
    _check_values(overrides)
    if scenario.pinned and not force:
        locked = {
            "--tau": overrides.tau,
            "--end-time": overrides.end_time,
            "--batch-sizes": overrides.batch_sizes,
            "--ref-refinement": overrides.ref_refinement,
            "--record-times": overrides.record_times,
        }
        if overrides.particle_counts is not None and tuple(overrides.particle_counts) not in scenario.particle_count_options:
            locked["--particle-counts"] = overrides.particle_counts
        changed = [flag for flag, value in locked.items() if value is not None]
        if changed:
            raise ConfigurationError(
                f"preset '{scenario.name}' pins {', '.join(changed)}; pass --force to override",
                location="preset",
            )

    spec = scenario.spec
    run = scenario.run
    if overrides.particle_counts is not None:
        spec = spec.with_particle_counts(overrides.particle_counts)
    if overrides.batch_sizes is not None:
        spec = spec.with_batch_sizes(overrides.batch_sizes)
    if overrides.end_time is not None:
        spec = spec.with_end_time(overrides.end_time)
    if overrides.tau is not None:
        spec = spec.with_step(min(overrides.tau))
        run = replace(run, tau_list=tuple(sorted(overrides.tau, reverse=True)))
    if overrides.replicas is not None:
        run = replace(run, replicas=overrides.replicas)
    if overrides.seed is not None:
        run = replace(run, seed=overrides.seed)
    if overrides.ref_refinement is not None:
        run = replace(run, ref_refinement=overrides.ref_refinement)
    if overrides.record_times is not None:
        run = replace(run, record_times=tuple(overrides.record_times))
    if force and scenario.pinned:
        logger.get_logger().warning(f"Preset '{scenario.name}' modified with --force; results are not a reproduction")
    return replace(scenario, spec=spec, run=run)
