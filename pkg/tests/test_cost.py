import numpy as np
import pytest

from src.analysis.cost import (
    FLOP_WEIGHTS,
    closed_form_counts,
    full_pair_count,
    kernel_eval_counts,
    rbm_pair_count,
    runtime_counts,
)
from src.engine.batching import sample_partition
from src.model.kernels import KernelForm
from src.scenarios.presets import preset
from tests.helpers import build_spec



def test_single_species_counts():
    report = kernel_eval_counts(build_spec(counts=(4,), dimension=1))
    assert report.full_per_step == 12
    assert report.rbm_per_step == 4
    assert report.runtime_full == 12
    assert report.runtime_rbm == 4
    assert report.full_total == 12 * 4
    assert report.rbm_total == 4 * 4


def test_two_species_counts():
    spec = build_spec(counts=(4, 4))
    assert [full_pair_count(spec, i, j) for i in range(2) for j in range(2)] == [12, 16, 16, 12]
    assert [rbm_pair_count(spec, i, j) for i in range(2) for j in range(2)] == [4, 8, 8, 4]
    report = closed_form_counts(spec)
    assert (report.full_per_step, report.rbm_per_step) == (56, 24)
    assert report.full_flops_per_step == 56 * FLOP_WEIGHTS[KernelForm.SCALED_CAUCHY](2)


def test_full_batches_cost_the_same():
    report = kernel_eval_counts(build_spec(counts=(4, 6), sizes=(4, 6)))
    assert report.ratio == 1.0
    assert report.flop_ratio == 1.0


def test_runtime_counts_follow_the_partition_layout():
    spec = build_spec(counts=(4, 8), sizes=(2, 2))
    counted = runtime_counts(spec, sample_partition(spec, np.random.default_rng(7)))
    report = closed_form_counts(spec)
    assert counted == {"full": report.full_per_step, "rbm": report.rbm_per_step}
    assert counted["rbm"] == 28


def test_substeps_multiply_totals():
    report = closed_form_counts(build_spec(counts=(4,), substeps=3))
    assert report.rbm_total == 4 * 4 * 3


def test_population_preset_ratio():
    report = kernel_eval_counts(preset("population3").spec)
    assert report.ratio <= 1e-2
    assert report.ratio == pytest.approx(885_000 / 224_985_000)
    assert report.to_dict()["ratio_per_step"] == report.ratio
