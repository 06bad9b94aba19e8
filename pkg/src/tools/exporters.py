"""
CSV and JSON exporters for simulation outputs.

Species ids and particle numbers are written 1-based. Column schemas are
listed in docs/FORMATS.md.
"""

from pathlib import Path
from typing import Any, Dict, Iterator, List, Sequence, Tuple

from ..analysis.consistency import ConsistencyReport
from ..analysis.convergence import ErrorSeries
from ..analysis.cost import CostReport
from ..analysis.histogram import Histogram
from ..core.storage import PathLike, write_csv, write_json
from ..engine.coupling import CostStudyRow
from ..engine.dynamics import Trajectory

FORMAT_CSV = "csv"
FORMAT_JSON = "json"

HISTOGRAM_HEADER = ("species", "bin_lo", "bin_hi", "density")
ERROR_HEADER = ("tau", "mean_error", "std_error")
COST_STUDY_HEADER = (
    "batch_sizes", "theta", "tau", "mean_error", "std_error", "rbm_evaluations", "reference_evaluations",
)
CONSISTENCY_HEADER = (
    "species", "particle", "closed_form_variance", "exact_variance", "mc_variance", "mc_variance_se",
)


def trajectory_header(dimension: int, with_replica: bool) -> List[str]:
    columns = ["time", "species", "particle"] + [f"x_{c + 1}" for c in range(dimension)]
    return (["replica"] + columns) if with_replica else columns


def trajectory_rows(trajectories: Sequence[Trajectory]) -> Iterator[List[Any]]:
    """One row per (replica, snapshot, species, particle), in that nesting order"""
    with_replica = len(trajectories) > 1
    for replica, trajectory in enumerate(trajectories):
        for state in trajectory.snapshots:
            for species, block in enumerate(state.positions):
                for particle, position in enumerate(block):
                    row = [state.time, species + 1, particle + 1] + [float(x) for x in position]
                    yield ([replica] + row) if with_replica else row


def _table(path: PathLike, fmt: str, header: Sequence[str], rows: Sequence[Sequence[Any]]) -> Path:
    if fmt == FORMAT_JSON:
        return write_json(path, [dict(zip(header, row)) for row in rows])
    return write_csv(path, header, rows)


def export_trajectories(path: PathLike, trajectories: Sequence[Trajectory], fmt: str = FORMAT_CSV) -> Path:
    """Write every snapshot of every replica; a replica column appears only for several replicas"""
    dimension = trajectories[0].final.positions[0].shape[1]
    header = trajectory_header(dimension, len(trajectories) > 1)
    return _table(path, fmt, header, list(trajectory_rows(trajectories)))


def export_histograms(path: PathLike, histograms: Sequence[Histogram], fmt: str = FORMAT_CSV) -> Path:
    rows = [row for h in histograms for row in h.rows()]
    return _table(path, fmt, HISTOGRAM_HEADER, rows)


def export_error_series(path: PathLike, series: ErrorSeries, fmt: str = FORMAT_CSV) -> Path:
    return _table(path, fmt, ERROR_HEADER, series.csv_rows())


def _sizes(batch_sizes: Tuple[int, ...]) -> str:
    return " ".join(str(p) for p in batch_sizes)


def export_cost_study(path: PathLike, rows: Sequence[CostStudyRow], fmt: str = FORMAT_CSV) -> Path:
    table = [
        (_sizes(r.batch_sizes), r.theta, r.tau, r.mean_error, r.std_error, r.rbm_evaluations, r.reference_evaluations)
        for r in rows
    ]
    return _table(path, fmt, COST_STUDY_HEADER, table)


def export_consistency(path: PathLike, report: ConsistencyReport, fmt: str = FORMAT_JSON) -> Path:
    """Full report as JSON, or one row per checked particle as CSV"""
    if fmt == FORMAT_JSON:
        return write_json(path, report.to_dict())
    rows = []
    for entry in report.particles:
        mc = entry.monte_carlo
        rows.append((
            entry.species + 1,
            entry.particle + 1,
            entry.closed_form_variance,
            "" if entry.exact_variance is None else entry.exact_variance,
            "" if mc is None else mc.variance,
            "" if mc is None else mc.variance_se,
        ))
    return write_csv(path, CONSISTENCY_HEADER, rows)


def export_cost(path: PathLike, report: CostReport, fmt: str = FORMAT_JSON) -> Path:
    if fmt == FORMAT_JSON:
        return write_json(path, report.to_dict())
    data = report.to_dict()
    return write_csv(path, ("quantity", "value"), [(key, "" if value is None else value) for key, value in data.items()])


def export_summary(path: PathLike, summary: Dict[str, Any]) -> Path:
    return write_json(path, summary)
