"""Builders shared by the test modules"""

from typing import Optional, Sequence

import numpy as np

from src.model.diffusion import DiffusionSpec
from src.model.kernels import KernelSpec
from src.model.potentials import PotentialSpec
from src.model.system import GaussianInit, SpeciesSpec, SystemSpec

CHARGES = (-1.0, 2.0, -2.0, 1.5)
RATES = (1.0, 4.0, 2.0, 3.0)


def build_spec(
    *,
    counts: Sequence[int] = (4,),
    sizes: Optional[Sequence[int]] = None,
    dimension: int = 2,
    sigma: float = 0.5,
    end_time: float = 1.0,
    step: float = 0.25,
    interacting: bool = True,
    confined: bool = True,
    substeps: int = 1,
    noise_as_drift: bool = False,
) -> SystemSpec:
    """Small multi-species system with scaled-Cauchy kernels and quadratic wells"""
    sizes = sizes if sizes is not None else (2,) * len(counts)
    n = len(counts)
    species = tuple(
        SpeciesSpec(
            index=i + 1,
            particle_count=counts[i],
            batch_size=sizes[i],
            diffusion=DiffusionSpec.additive(sigma),
            potential=(
                PotentialSpec.quadratic_well(RATES[i], (0.5 * i,) * dimension) if confined else PotentialSpec.none()
            ),
            initial=GaussianInit(mean=(0.0,) * dimension, variance=1.0),
        )
        for i in range(n)
    )
    kernels = tuple(
        tuple(
            KernelSpec.scaled_cauchy(CHARGES[i], CHARGES[j]) if interacting else KernelSpec.zero()
            for j in range(n)
        )
        for i in range(n)
    )
    return SystemSpec(
        dimension=dimension,
        species=species,
        kernels=kernels,
        end_time=end_time,
        step=step,
        noise_as_drift=noise_as_drift,
        substeps=substeps,
    )


def fixed_positions(spec: SystemSpec, seed: int = 11):
    rng = np.random.default_rng(seed)
    return tuple(2.0 * rng.standard_normal((s.particle_count, spec.dimension)) for s in spec.species)


MINIMAL_CONFIG = """\
[system]
name = minimal
dimension = 1
end_time = 1.0

[species.1]
particle_count = 4
batch_size = 2
sigma = 1.0
potential = none

[run]
tau = 0.5
seed = 3
"""
