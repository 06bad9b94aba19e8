"""
Random batch divisions, super-batches and interaction coefficients.

Batch labels are 1-based (r = 1..b_i). The super-batch C_r collects the r-th
batch of every species; species with b_j < r contribute nothing to it.
"""

import itertools
import math
from dataclasses import dataclass
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import ConfigurationError, EnumerationTooLargeError
from ..core.logger import logger
from ..core.settings import get_settings
from ..model.system import SystemSpec

ParticleRef = Tuple[int, int]


@dataclass(frozen=True)
class CoefficientTable:
    """
    alpha_ij = 1 / (N_j - delta_ij)
    beta_ij  = b_i / ((p_j - delta_ij) min(b_i, b_j))

    With legacy=True beta drops the b_i / min(b_i, b_j) factor. That variant
    is biased whenever batch counts differ and only serves as a negative control.
    """
    alpha: np.ndarray
    beta: np.ndarray
    legacy: bool = False

    def to_dict(self) -> dict:
        return {"alpha": self.alpha.tolist(), "beta": self.beta.tolist(), "legacy_beta": self.legacy}


def interaction_coefficients(spec: SystemSpec, legacy_beta: bool = False) -> CoefficientTable:
    n = spec.n_species
    counts = spec.particle_counts
    sizes = spec.batch_sizes
    batches = spec.batch_counts
    alpha = np.empty((n, n))
    beta = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            delta = 1 if i == j else 0
            alpha[i, j] = 1.0 / (counts[j] - delta)
            if legacy_beta:
                beta[i, j] = 1.0 / (sizes[j] - delta)
            else:
                beta[i, j] = batches[i] / ((sizes[j] - delta) * min(batches[i], batches[j]))
    alpha.setflags(write=False)
    beta.setflags(write=False)
    return CoefficientTable(alpha=alpha, beta=beta, legacy=legacy_beta)


@dataclass(frozen=True)
class Partition:
    """
    One joint random division of every species into labeled batches.

    assignments[i][k] is the 1-based batch label of particle k of species i;
    members[i] has shape (b_i, p_i) and row r - 1 lists C_{i,r} in increasing
    particle order.
    """
    assignments: Tuple[np.ndarray, ...]
    members: Tuple[np.ndarray, ...]

    @classmethod
    def from_members(cls, members: Sequence[np.ndarray]) -> "Partition":
        rows = []
        labels = []
        for block in members:
            block = np.sort(np.asarray(block, dtype=np.int64), axis=1)
            assignment = np.empty(block.size, dtype=np.int64)
            assignment[block] = np.arange(1, block.shape[0] + 1)[:, None]
            block.setflags(write=False)
            assignment.setflags(write=False)
            rows.append(block)
            labels.append(assignment)
        return cls(assignments=tuple(labels), members=tuple(rows))

    @classmethod
    def from_assignments(cls, assignments: Sequence[Sequence[int]], batch_sizes: Sequence[int]) -> "Partition":
        """
        Rebuild a partition from label arrays.

        Raises:
            ConfigurationError: Labels out of range or batch sizes not exact
        """
        if len(assignments) != len(batch_sizes):
            raise ConfigurationError(
                f"partition has {len(assignments)} species, expected {len(batch_sizes)}"
            )
        members = []
        for i, (labels, p) in enumerate(zip(assignments, batch_sizes)):
            labels = np.asarray(labels, dtype=np.int64)
            if labels.size % p != 0:
                raise ConfigurationError(f"species {i + 1}: {labels.size} labels do not split into batches of {p}")
            b = labels.size // p
            if labels.size and (labels.min() < 1 or labels.max() > b):
                raise ConfigurationError(f"species {i + 1}: batch labels must lie in 1..{b}")
            sizes = np.bincount(labels, minlength=b + 1)[1:]
            if np.any(sizes != p):
                raise ConfigurationError(f"species {i + 1}: every batch must hold exactly {p} particles")
            members.append(np.argsort(labels, kind="stable").reshape(b, p))
        return cls.from_members(members)

    @property
    def n_species(self) -> int:
        return len(self.members)

    def batch_count(self, i: int) -> int:
        return self.members[i].shape[0]

    def label(self, i: int, k: int) -> int:
        return int(self.assignments[i][k])

    def batch(self, i: int, r: int) -> np.ndarray:
        """C_{i,r}; empty when r exceeds b_i"""
        if r < 1:
            raise IndexError(f"batch labels start at 1, got {r}")
        if r > self.batch_count(i):
            return np.empty(0, dtype=np.int64)
        return self.members[i][r - 1]

    def super_batch(self, r: int) -> List[ParticleRef]:
        """C_r = {(i, k) : k in C_{i,r}}"""
        return [(i, int(k)) for i in range(self.n_species) for k in self.batch(i, r)]

    def to_dict(self) -> dict:
        return {"assignments": [a.tolist() for a in self.assignments]}

    @classmethod
    def from_dict(cls, data: Dict, batch_sizes: Sequence[int]) -> "Partition":
        return cls.from_assignments(data["assignments"], batch_sizes)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return len(self.assignments) == len(other.assignments) and all(
            np.array_equal(a, b) for a, b in zip(self.assignments, other.assignments)
        )

    def __hash__(self) -> int:
        return hash(tuple(a.tobytes() for a in self.assignments))


def sample_partition(spec: SystemSpec, rng: np.random.Generator) -> Partition:
    """
    Draw a uniform ordered partition per species, independently.

    Each species' indices are shuffled and cut into consecutive blocks of p_i;
    the block number is the batch label.
    """
    members = []
    for species in spec.species:
        order = rng.permutation(species.particle_count)
        members.append(order.reshape(species.batch_count, species.batch_size))
    return Partition.from_members(members)


def inclusion_indicator(partition: Partition, first: ParticleRef, second: ParticleRef) -> int:
    """
    1 if both particles lie in the same super-batch, else 0 (also for a self-pair).

    Raises:
        IndexError: Species or particle index out of range
    """
    for i, k in (first, second):
        if not 0 <= i < partition.n_species:
            raise IndexError(f"species index {i} outside 0..{partition.n_species - 1}")
        if not 0 <= k < partition.assignments[i].size:
            raise IndexError(f"particle index {k} outside 0..{partition.assignments[i].size - 1} for species {i}")
    if first == second:
        return 0
    return int(partition.label(*first) == partition.label(*second))


def inclusion_probability(spec: SystemSpec, first: ParticleRef, second: ParticleRef) -> float:
    """P(I_i^k(j, l) = 1) over the uniform partition law"""
    if first == second:
        return 0.0
    (i, _), (j, _) = first, second
    counts, sizes, batches = spec.particle_counts, spec.batch_sizes, spec.batch_counts
    if i == j:
        return (sizes[i] - 1) / (counts[i] - 1)
    return min(batches[i], batches[j]) / (batches[i] * batches[j])


def joint_inclusion_probability(spec: SystemSpec, anchor: ParticleRef, first: ParticleRef, second: ParticleRef) -> float:
    """
    P(I_i^k(j, l) = 1 and I_i^k(j', l') = 1) for anchor (i, k).

    Partners equal to the anchor never share a batch with it, and a repeated
    partner reduces to the single inclusion probability.
    """
    if anchor in (first, second):
        return 0.0
    if first == second:
        return inclusion_probability(spec, anchor, first)
    i = anchor[0]
    j, jp = first[0], second[0]
    counts, sizes, b = spec.particle_counts, spec.batch_sizes, spec.batch_counts
    if j == i and jp == i:
        return (sizes[i] - 1) * (sizes[i] - 2) / ((counts[i] - 1) * (counts[i] - 2))
    if j == i or jp == i:
        other = jp if j == i else j
        return inclusion_probability(spec, anchor, (i, -1)) * min(b[i], b[other]) / (b[i] * b[other])
    if j == jp:
        return min(b[i], b[j]) * (sizes[j] - 1) / (b[i] * b[j] * (counts[j] - 1))
    return min(b[i], b[j], b[jp]) / (b[i] * b[j] * b[jp])


def species_partition_count(particle_count: int, batch_size: int) -> int:
    """N! / (p!)^b ordered partitions of one species"""
    b = particle_count // batch_size
    return math.factorial(particle_count) // math.factorial(batch_size) ** b


def partition_count(spec: SystemSpec) -> int:
    return math.prod(species_partition_count(s.particle_count, s.batch_size) for s in spec.species)


def _ordered_blocks(items: Tuple[int, ...], size: int) -> Iterator[Tuple[Tuple[int, ...], ...]]:
    if not items:
        yield ()
        return
    for block in itertools.combinations(items, size):
        chosen = set(block)
        rest = tuple(x for x in items if x not in chosen)
        for tail in _ordered_blocks(rest, size):
            yield (block,) + tail


def _species_members(particle_count: int, batch_size: int) -> List[np.ndarray]:
    return [
        np.array(blocks, dtype=np.int64)
        for blocks in _ordered_blocks(tuple(range(particle_count)), batch_size)
    ]


def enumerate_partitions(spec: SystemSpec, cap: Optional[int] = None) -> Iterator[Partition]:
    """
    Every joint ordered partition exactly once, each with weight 1 / count.

    Raises:
        EnumerationTooLargeError: More joint partitions than the cap (checked eagerly)
    """
    limit = cap if cap is not None else get_settings().enumeration_cap
    total = partition_count(spec)
    if total > limit:
        raise EnumerationTooLargeError(total, limit)
    logger.get_logger().debug(f"Enumerating {total} joint partitions")
    per_species = [_species_members(s.particle_count, s.batch_size) for s in spec.species]
    return (Partition.from_members(choice) for choice in itertools.product(*per_species))
