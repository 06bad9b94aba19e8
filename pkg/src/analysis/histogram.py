"""Fixed-bin density histograms of one-dimensional species and their overlap"""

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import ConfigurationError, InvalidStateError
from ..core.logger import logger


@dataclass(frozen=True)
class Histogram:
    """
    Piecewise-constant density on fixed bins.

    density integrates to 1 over the in-range samples (all zeros when none
    fall inside); below/above hold the fractions of all samples outside.
    """
    species: int
    edges: np.ndarray
    density: np.ndarray
    counts: np.ndarray
    below: float
    above: float
    samples: int

    @property
    def width(self) -> float:
        return float(self.edges[1] - self.edges[0])

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    def rows(self):
        """(species, bin_lo, bin_hi, density) rows for CSV export"""
        return [
            (self.species + 1, float(lo), float(hi), float(value))
            for lo, hi, value in zip(self.edges[:-1], self.edges[1:], self.density)
        ]

    def to_dict(self) -> dict:
        return {
            "species": self.species + 1,
            "edges": self.edges.tolist(),
            "density": self.density.tolist(),
            "below": self.below,
            "above": self.above,
            "samples": self.samples,
        }


def histogram(
    values: np.ndarray,
    species: int,
    bin_count: int,
    value_range: Optional[Tuple[float, float]] = None,
) -> Histogram:
    """
    Density histogram of the positions of one species.

    Args:
        values: (N, 1) positions, or several replicas stacked along the first axis
        species: 0-based species index (carried into the output)
        bin_count: Number of equal-width bins
        value_range: (lo, hi); defaults to the sample range

    Raises:
        ConfigurationError: d != 1, bin_count < 1 or an empty range
        InvalidStateError: No samples
    """
    data = np.asarray(values, dtype=float)
    if data.ndim == 2:
        if data.shape[1] != 1:
            raise ConfigurationError(f"histograms need d = 1, got d = {data.shape[1]}")
        data = data[:, 0]
    data = data.reshape(-1)
    if bin_count < 1:
        raise ConfigurationError(f"bin count must be at least 1, got {bin_count}")
    if data.size == 0:
        raise InvalidStateError(f"species {species + 1} has no samples to histogram")
    lo, hi = value_range if value_range is not None else (float(data.min()), float(data.max()))
    if hi == lo and value_range is None:
        lo, hi = lo - 0.5, hi + 0.5
    if not hi > lo:
        raise ConfigurationError(f"histogram range needs lo < hi, got [{lo}, {hi}]")
    edges = np.linspace(lo, hi, bin_count + 1)
    counts, _ = np.histogram(data, bins=edges)
    below = float(np.count_nonzero(data < lo)) / data.size
    above = float(np.count_nonzero(data > hi)) / data.size
    if below or above:
        logger.get_logger().warning(
            f"species {species + 1}: {below + above:.2%} of the samples fall outside [{lo:g}, {hi:g}]"
        )
    inside = int(counts.sum())
    if inside == 0:
        density = np.zeros(bin_count)
    else:
        density = counts / (inside * (edges[1] - edges[0]))
    return Histogram(
        species=species, edges=edges, density=density, counts=counts,
        below=below, above=above, samples=int(data.size),
    )


def overlap_coefficient(first: Histogram, second: Histogram) -> float:
    """integral of min(f, g) over shared bins; 1 for identical densities, 0 for disjoint ones"""
    if first.edges.shape != second.edges.shape or not np.allclose(first.edges, second.edges):
        raise ConfigurationError("overlap needs histograms on identical bins")
    return float(np.sum(np.minimum(first.density, second.density)) * first.width)


def pairwise_overlaps(histograms: Sequence[Histogram]):
    """{(a, b): overlap} over all species pairs a < b (0-based)"""
    return {
        (a, b): overlap_coefficient(histograms[a], histograms[b])
        for a in range(len(histograms))
        for b in range(a + 1, len(histograms))
    }
