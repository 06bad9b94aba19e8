"""
Moments of the remainder chi: closed form, exact enumeration and Monte Carlo.

Var(chi_i^k) denotes the scalar E|chi_i^k|^2; products of kernel values in
the A-terms are Euclidean dot products. With m_j = min(b_i, b_j):

    Var = sum_{j != j', j, j' != i} c1(j, j') A^{jj'}
        + sum_{j != i} (c2(j) A^j + c3(j) A_1^j) + c4 A_i

    c1 = b_i min(b_i, b_j, b_j') / (m_j m_j') - 1
    c2 = b_i / m_j - b_i / (p_j m_j) - 1 + 1 / N_j
    c3 = b_i / (p_j m_j) - 1 / N_j
    c4 = 1 / (p_i - 1) - 1 / (N_i - 1)

The coefficients follow from the joint inclusion probabilities of the uniform
partition law; the mixed same-species/other-species terms cancel.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import ConfigurationError
from ..core.logger import logger
from ..core.settings import get_settings
from ..engine.batching import (
    CoefficientTable,
    enumerate_partitions,
    interaction_coefficients,
    partition_count,
    sample_partition,
)
from ..engine.dynamics import Positions, RemainderTerms
from ..model.system import SystemSpec
from .theory import TheoryConstants, theory_constants

MODE_ENUMERATION = "enumeration"
MODE_MONTE_CARLO = "monte_carlo"

# Enumeration agreement, relative to (1 + scale)
EXACT_RTOL = 1e-12
# Monte-Carlo agreement in standard errors
MC_SIGMAS = 4.0
# Above this many particles the report covers the first particle of each species
FULL_REPORT_PARTICLES = 64


@dataclass(frozen=True)
class ATerms:
    """A-terms of one particle (i, k); species keys are 0-based"""
    cross: Dict[Tuple[int, int], float]
    pair: Dict[int, float]
    square: Dict[int, float]
    own: float

    def to_dict(self) -> dict:
        return {
            "cross": {f"{j + 1},{jp + 1}": v for (j, jp), v in sorted(self.cross.items())},
            "pair": {str(j + 1): v for j, v in sorted(self.pair.items())},
            "square": {str(j + 1): v for j, v in sorted(self.square.items())},
            "own": self.own,
        }


def a_terms(spec: SystemSpec, positions: Positions, i: int, k: int) -> ATerms:
    """
    A^{jj'} = mean_j K . mean_j' K, A^j = off-diagonal mean of K . K',
    A_1^j = mean |K|^2 and A_i = sum_l |K - mean|^2 / (N_i - 2) over the own species.
    """
    terms = RemainderTerms(spec, positions, i, k)
    n = spec.n_species
    counts = spec.particle_counts
    means: Dict[int, np.ndarray] = {}
    pair: Dict[int, float] = {}
    square: Dict[int, float] = {}
    for j in range(n):
        if j == i:
            continue
        block = terms.terms[j]
        total = terms.totals[j]
        sum_sq = float(np.sum(block * block))
        means[j] = total / counts[j]
        pair[j] = (float(total @ total) - sum_sq) / (counts[j] * (counts[j] - 1))
        square[j] = sum_sq / counts[j]
    cross = {(j, jp): float(means[j] @ means[jp]) for j in means for jp in means if j != jp}

    own = 0.0
    partners = counts[i] - 1
    if partners >= 2:
        block = np.delete(terms.terms[i], k, axis=0)
        centered = block - block.mean(axis=0)
        own = float(np.sum(centered * centered)) / (partners - 1)
    return ATerms(cross=cross, pair=pair, square=square, own=own)


def _coefficients(spec: SystemSpec, i: int):
    b = spec.batch_counts
    p = spec.batch_sizes
    counts = spec.particle_counts
    low = {j: min(b[i], b[j]) for j in range(spec.n_species)}

    def c1(j: int, jp: int) -> float:
        return b[i] * min(b[i], b[j], b[jp]) / (low[j] * low[jp]) - 1.0

    def c2(j: int) -> float:
        return b[i] / low[j] - b[i] / (p[j] * low[j]) - 1.0 + 1.0 / counts[j]

    def c3(j: int) -> float:
        return b[i] / (p[j] * low[j]) - 1.0 / counts[j]

    c4 = 1.0 / (p[i] - 1) - 1.0 / (counts[i] - 1)
    return c1, c2, c3, c4


def closed_form_chi_variance(spec: SystemSpec, positions: Positions, i: int, k: int) -> Tuple[float, ATerms]:
    """E|chi_i^k|^2 assembled from the A-terms; returns (variance, A-terms)"""
    terms = a_terms(spec, positions, i, k)
    c1, c2, c3, c4 = _coefficients(spec, i)
    value = sum(c1(j, jp) * v for (j, jp), v in terms.cross.items())
    value += sum(c2(j) * terms.pair[j] + c3(j) * terms.square[j] for j in terms.pair)
    value += c4 * terms.own
    return float(value), terms


def exact_chi_moments(
    spec: SystemSpec,
    positions: Positions,
    i: int,
    k: int,
    coefficients: Optional[CoefficientTable] = None,
    cap: Optional[int] = None,
) -> Tuple[np.ndarray, float]:
    """
    Mean vector and E|chi|^2 averaged over every joint partition.

    Raises:
        EnumerationTooLargeError: Joint partition count above the cap
    """
    table = coefficients if coefficients is not None else interaction_coefficients(spec)
    terms = RemainderTerms(spec, positions, i, k)
    total = np.zeros(spec.dimension)
    total_sq = 0.0
    count = 0
    for partition in enumerate_partitions(spec, cap):
        value = terms.evaluate(partition, table)
        total += value
        total_sq += float(value @ value)
        count += 1
    return total / count, total_sq / count


@dataclass(frozen=True)
class MonteCarloMoments:
    mean: np.ndarray
    variance: float
    mean_se: np.ndarray
    variance_se: float
    samples: int


def _sample_values(
    spec: SystemSpec,
    remainders: Sequence[RemainderTerms],
    samples: int,
    rng: np.random.Generator,
    table: CoefficientTable,
) -> List[np.ndarray]:
    values = [np.empty((samples, spec.dimension)) for _ in remainders]
    for s in range(samples):
        partition = sample_partition(spec, rng)
        for index, terms in enumerate(remainders):
            values[index][s] = terms.evaluate(partition, table)
    return values


def _moments(values: np.ndarray) -> MonteCarloMoments:
    samples = values.shape[0]
    squares = np.sum(values * values, axis=1)
    return MonteCarloMoments(
        mean=values.mean(axis=0),
        variance=float(squares.mean()),
        mean_se=values.std(axis=0, ddof=1) / np.sqrt(samples),
        variance_se=float(squares.std(ddof=1) / np.sqrt(samples)),
        samples=samples,
    )


def empirical_chi_moments(
    spec: SystemSpec,
    positions: Positions,
    i: int,
    k: int,
    samples: int,
    rng: np.random.Generator,
    coefficients: Optional[CoefficientTable] = None,
) -> MonteCarloMoments:
    """
    Sample moments of chi over freshly drawn partitions.

    Raises:
        ConfigurationError: Fewer than two samples
    """
    if samples < 2:
        raise ConfigurationError(f"Monte-Carlo moments need at least 2 samples, got {samples}", location="mc")
    table = coefficients if coefficients is not None else interaction_coefficients(spec)
    values = _sample_values(spec, [RemainderTerms(spec, positions, i, k)], samples, rng, table)[0]
    return _moments(values)


@dataclass
class ParticleConsistency:
    species: int
    particle: int
    closed_form_variance: float
    a_terms: ATerms
    exact_mean: Optional[np.ndarray] = None
    exact_variance: Optional[float] = None
    monte_carlo: Optional[MonteCarloMoments] = None

    def to_dict(self) -> dict:
        data = {
            "species": self.species + 1,
            "particle": self.particle + 1,
            "closed_form_variance": self.closed_form_variance,
            "a_terms": self.a_terms.to_dict(),
            "exact_mean": None if self.exact_mean is None else self.exact_mean.tolist(),
            "exact_variance": self.exact_variance,
            "mc": None,
        }
        if self.monte_carlo is not None:
            mc = self.monte_carlo
            data["mc"] = {
                "samples": mc.samples,
                "mean": mc.mean.tolist(),
                "mean_se": mc.mean_se.tolist(),
                "variance": mc.variance,
                "variance_se": mc.variance_se,
            }
        return data


@dataclass
class ConsistencyReport:
    mode: str
    particles: List[ParticleConsistency]
    theory: TheoryConstants
    legacy_beta: bool
    partition_count: Optional[int] = None
    max_mean_abs: float = 0.0
    max_variance_discrepancy: float = 0.0
    failures: List[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "passed": self.passed,
            "legacy_beta": self.legacy_beta,
            "partition_count": self.partition_count,
            "max_mean_abs": self.max_mean_abs,
            "max_variance_discrepancy": self.max_variance_discrepancy,
            "failures": list(self.failures),
            "theory": self.theory.to_dict(),
            "particles": [p.to_dict() for p in self.particles],
        }


def _default_particles(spec: SystemSpec) -> List[Tuple[int, int]]:
    if spec.total_particles <= FULL_REPORT_PARTICLES:
        return [(i, k) for i, s in enumerate(spec.species) for k in range(s.particle_count)]
    return [(i, 0) for i in range(spec.n_species)]


def consistency_report(
    spec: SystemSpec,
    positions: Positions,
    mode: str = MODE_ENUMERATION,
    samples: int = 0,
    rng: Optional[np.random.Generator] = None,
    legacy_beta: bool = False,
    particles: Optional[Sequence[Tuple[int, int]]] = None,
    cap: Optional[int] = None,
) -> ConsistencyReport:
    """
    Check zero mean and the closed-form variance of chi particle by particle.

    Enumeration mode requires |mean| <= 1e-12 (1 + scale), with scale the
    largest full interaction sum, and a relative variance agreement of 1e-12.
    Monte-Carlo mode requires agreement within four standard errors.
    """
    if mode not in (MODE_ENUMERATION, MODE_MONTE_CARLO):
        raise ConfigurationError(f"unknown consistency mode '{mode}'")
    table = interaction_coefficients(spec, legacy_beta=legacy_beta)
    chosen = list(particles) if particles is not None else _default_particles(spec)
    report = ConsistencyReport(mode=mode, particles=[], theory=theory_constants(spec), legacy_beta=legacy_beta)
    remainders = [RemainderTerms(spec, positions, i, k) for i, k in chosen]

    if mode == MODE_ENUMERATION:
        limit = cap if cap is not None else get_settings().enumeration_cap
        report.partition_count = partition_count(spec)
        sums = [np.zeros(spec.dimension) for _ in chosen]
        squares = [0.0 for _ in chosen]
        for partition in enumerate_partitions(spec, limit):
            for index, terms in enumerate(remainders):
                value = terms.evaluate(partition, table)
                sums[index] += value
                squares[index] += float(value @ value)
        total = report.partition_count
        exact = [(sums[index] / total, squares[index] / total) for index in range(len(chosen))]
        sampled = [None] * len(chosen)
    else:
        if samples < 2:
            raise ConfigurationError(f"Monte-Carlo mode needs at least 2 samples, got {samples}", location="mc")
        stream = rng if rng is not None else np.random.default_rng(0)
        exact = [(None, None)] * len(chosen)
        sampled = [_moments(v) for v in _sample_values(spec, remainders, samples, stream, table)]

    for index, (i, k) in enumerate(chosen):
        variance, terms = closed_form_chi_variance(spec, positions, i, k)
        entry = ParticleConsistency(
            species=i,
            particle=k,
            closed_form_variance=variance,
            a_terms=terms,
            exact_mean=exact[index][0],
            exact_variance=exact[index][1],
            monte_carlo=sampled[index],
        )
        report.particles.append(entry)
        _check_particle(report, entry, remainders[index], table)

    log = logger.get_logger()
    if report.passed:
        log.info(f"Consistency check passed for {len(chosen)} particles ({mode})")
    else:
        log.warning(f"Consistency check failed: {len(report.failures)} mismatches ({mode})")
    return report


def _check_particle(
    report: ConsistencyReport, entry: ParticleConsistency, terms: RemainderTerms, table: CoefficientTable
) -> None:
    where = f"species {entry.species + 1}, particle {entry.particle + 1}"
    closed = entry.closed_form_variance
    if entry.exact_mean is not None:
        scale = max(float(np.max(np.abs(np.asarray(t) * table.alpha[entry.species, j])))
                    for j, t in enumerate(terms.totals))
        mean_abs = float(np.max(np.abs(entry.exact_mean)))
        discrepancy = abs(closed - entry.exact_variance)
        report.max_mean_abs = max(report.max_mean_abs, mean_abs)
        report.max_variance_discrepancy = max(report.max_variance_discrepancy, discrepancy)
        if mean_abs > EXACT_RTOL * (1.0 + scale):
            report.failures.append(f"{where}: exact mean {mean_abs:.3e} is not zero")
        if discrepancy > EXACT_RTOL * (1.0 + abs(entry.exact_variance)):
            report.failures.append(
                f"{where}: closed-form variance {closed:.15g} differs from exact {entry.exact_variance:.15g}"
            )
        return
    mc = entry.monte_carlo
    mean_excess = np.abs(mc.mean) - (MC_SIGMAS * mc.mean_se + EXACT_RTOL)
    discrepancy = abs(closed - mc.variance)
    report.max_mean_abs = max(report.max_mean_abs, float(np.max(np.abs(mc.mean))))
    report.max_variance_discrepancy = max(report.max_variance_discrepancy, discrepancy)
    if np.any(mean_excess > 0):
        report.failures.append(f"{where}: Monte-Carlo mean {mc.mean.tolist()} exceeds {MC_SIGMAS:g} standard errors")
    if discrepancy > MC_SIGMAS * mc.variance_se + EXACT_RTOL * (1.0 + abs(closed)):
        report.failures.append(
            f"{where}: closed-form variance {closed:.6g} vs Monte-Carlo {mc.variance:.6g} "
            f"(se {mc.variance_se:.3g})"
        )
