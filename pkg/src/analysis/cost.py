"""Kernel-evaluation counts and weighted arithmetic estimates for full and batched steps"""

from dataclasses import dataclass, replace
from typing import Dict, Optional

import numpy as np

from ..core.exceptions import ConsistencyMismatchError
from ..core.logger import logger
from ..engine.batching import Partition, interaction_coefficients, sample_partition
from ..engine.dynamics import EvaluationCounter, full_drift_field, rbm_drift_field
from ..model.kernels import KernelForm, KernelSpec
from ..model.system import SystemSpec

# Arithmetic operations per kernel evaluation in dimension d, including the
# difference x_i - x_j and the accumulation into the drift sum.
FLOP_WEIGHTS = {
    KernelForm.ZERO: lambda d: 0,
    KernelForm.SCALED_CAUCHY: lambda d: 6 * d + 3,
    KernelForm.BUMP_GRADIENT: lambda d: 6 * d + 14,
    KernelForm.OPINION: lambda d: 5 * d + 24,
    KernelForm.CUSTOM: lambda d: 12 * d,
}


def full_pair_count(spec: SystemSpec, i: int, j: int) -> int:
    """Evaluations of K_ij in one full step: N_i (N_j - delta_ij)"""
    counts = spec.particle_counts
    return counts[i] * (counts[j] - (1 if i == j else 0))


def rbm_pair_count(spec: SystemSpec, i: int, j: int) -> int:
    """Evaluations of K_ij in one batched step: min(b_i, b_j) p_i (p_j - delta_ij)"""
    b = spec.batch_counts
    p = spec.batch_sizes
    return min(b[i], b[j]) * p[i] * (p[j] - (1 if i == j else 0))


def _weighted(spec: SystemSpec, counter) -> int:
    total = 0
    for i in range(spec.n_species):
        for j in range(spec.n_species):
            total += counter(spec, i, j) * FLOP_WEIGHTS[spec.kernels[i][j].form](spec.dimension)
    return total


@dataclass(frozen=True)
class CostReport:
    full_per_step: int
    rbm_per_step: int
    full_flops_per_step: int
    rbm_flops_per_step: int
    steps: int
    substeps: int
    runtime_full: Optional[int] = None
    runtime_rbm: Optional[int] = None

    @property
    def full_total(self) -> int:
        return self.full_per_step * self.steps * self.substeps

    @property
    def rbm_total(self) -> int:
        return self.rbm_per_step * self.steps * self.substeps

    @property
    def ratio(self) -> float:
        return self.rbm_per_step / self.full_per_step if self.full_per_step else 1.0

    @property
    def flop_ratio(self) -> float:
        return self.rbm_flops_per_step / self.full_flops_per_step if self.full_flops_per_step else 1.0

    def to_dict(self) -> dict:
        return {
            "full_per_step": self.full_per_step,
            "rbm_per_step": self.rbm_per_step,
            "ratio_per_step": self.ratio,
            "steps": self.steps,
            "substeps": self.substeps,
            "full_total": self.full_total,
            "rbm_total": self.rbm_total,
            "full_flops_per_step": self.full_flops_per_step,
            "rbm_flops_per_step": self.rbm_flops_per_step,
            "flop_ratio": self.flop_ratio,
            "runtime_full": self.runtime_full,
            "runtime_rbm": self.runtime_rbm,
        }


def closed_form_counts(spec: SystemSpec) -> CostReport:
    n = spec.n_species
    pairs = [(i, j) for i in range(n) for j in range(n)]
    return CostReport(
        full_per_step=sum(full_pair_count(spec, i, j) for i, j in pairs),
        rbm_per_step=sum(rbm_pair_count(spec, i, j) for i, j in pairs),
        full_flops_per_step=_weighted(spec, full_pair_count),
        rbm_flops_per_step=_weighted(spec, rbm_pair_count),
        steps=spec.step_count,
        substeps=spec.substeps,
    )


def counting_twin(spec: SystemSpec) -> SystemSpec:
    """Same system with every kernel replaced by Zero: drifts skip evaluation but still count"""
    zero = KernelSpec.zero()
    kernels = tuple(tuple(zero for _ in row) for row in spec.kernels)
    return replace(spec, kernels=kernels)


def runtime_counts(spec: SystemSpec, partition: Partition) -> Dict[str, int]:
    """Counter readings of one full and one batched drift evaluation"""
    twin = counting_twin(spec)
    table = interaction_coefficients(twin)
    positions = tuple(np.zeros((s.particle_count, spec.dimension)) for s in spec.species)
    full_counter = EvaluationCounter()
    rbm_counter = EvaluationCounter()
    full_drift_field(twin, table, full_counter)(positions, None)
    rbm_drift_field(twin, table, rbm_counter)(positions, partition)
    return {"full": full_counter.count, "rbm": rbm_counter.count}


def kernel_eval_counts(spec: SystemSpec, partition: Optional[Partition] = None) -> CostReport:
    """
    Exact per-step counts, cross-checked against the runtime counter.

    Raises:
        ConsistencyMismatchError: Closed-form and counted evaluations differ
    """
    if partition is None:
        partition = sample_partition(spec, np.random.default_rng(0))
    report = closed_form_counts(spec)
    counted = runtime_counts(spec, partition)
    if counted["full"] != report.full_per_step or counted["rbm"] != report.rbm_per_step:
        raise ConsistencyMismatchError(
            f"kernel evaluation counts disagree: closed form full={report.full_per_step}, "
            f"rbm={report.rbm_per_step}; counted full={counted['full']}, rbm={counted['rbm']}"
        )
    logger.get_logger().debug(
        f"Cost per step: full={report.full_per_step}, rbm={report.rbm_per_step}, ratio={report.ratio:.3g}"
    )
    return replace(report, runtime_full=counted["full"], runtime_rbm=counted["rbm"])
