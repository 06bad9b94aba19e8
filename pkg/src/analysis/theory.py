"""Error-bound constants: the species variance factors Gamma_i, theta and gamma"""

from dataclasses import dataclass
from typing import Optional, Tuple

from ..model.system import SystemSpec


@dataclass(frozen=True)
class TheoryConstants:
    gamma_factors: Tuple[float, ...]
    theta: float
    gamma: float
    variance_bound: Optional[float]

    def to_dict(self) -> dict:
        return {
            "gamma_factors": list(self.gamma_factors),
            "theta": self.theta,
            "gamma": self.gamma,
            "variance_bound": self.variance_bound,
        }


def gamma_factors(spec: SystemSpec) -> Tuple[float, ...]:
    """
    Gamma_i for every species.

    Gamma_i = sum_{j != j', j, j' != i} (max(b_i, b_j, b_j') / max(b_j, b_j') - 1)
            + sum_{j != i} ((b_i - min_ij) / min_ij - (2 - max(b_i, b_j)) / N_j + b_i / (p_j min_ij))
            + 1 / (p_i - 1) - 1 / (N_i - 1),
    with min_ij = min(b_i, b_j).
    """
    n = spec.n_species
    b = spec.batch_counts
    p = spec.batch_sizes
    counts = spec.particle_counts
    factors = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        value = 0.0
        for j in others:
            for jp in others:
                if j != jp:
                    value += max(b[i], b[j], b[jp]) / max(b[j], b[jp]) - 1.0
        for j in others:
            low = min(b[i], b[j])
            value += (b[i] - low) / low - (2 - max(b[i], b[j])) / counts[j] + b[i] / (p[j] * low)
        value += 1.0 / (p[i] - 1) - 1.0 / (counts[i] - 1)
        factors.append(value)
    return tuple(factors)


def theta(spec: SystemSpec) -> float:
    """max_j b_j / min_j b_j"""
    b = spec.batch_counts
    return max(b) / min(b)


def gamma_exponent(spec: SystemSpec) -> float:
    """3 (max(1, q_1, ..., q_n) + 1) from the declared growth exponents"""
    return 3.0 * (max([1.0] + [s.potential.growth_q for s in spec.species]) + 1.0)


def variance_bound(spec: SystemSpec) -> Optional[float]:
    """8 max ||K_ij||^2 sum_k Gamma_k; None if any sup-norm is undeclared"""
    norms = [kernel.sup_norm for row in spec.kernels for kernel in row]
    if any(norm is None for norm in norms):
        return None
    return 8.0 * max(norms) ** 2 * sum(gamma_factors(spec))


def theory_constants(spec: SystemSpec) -> TheoryConstants:
    return TheoryConstants(
        gamma_factors=gamma_factors(spec),
        theta=theta(spec),
        gamma=gamma_exponent(spec),
        variance_bound=variance_bound(spec),
    )
