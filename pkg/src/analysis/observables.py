"""Scalar observables of particle states: moments, spread and clusters"""

from dataclasses import dataclass
from typing import List, Sequence

import numpy as np

from ..core.exceptions import InvalidStateError


def second_moment(positions: Sequence[np.ndarray]) -> float:
    """(1/N) sum over all particles of |X|^2"""
    blocks = getattr(positions, "positions", positions)
    total = sum(float(np.sum(block * block)) for block in blocks)
    count = sum(block.shape[0] for block in blocks)
    if count == 0:
        raise InvalidStateError("no particles")
    return total / count


def opinion_spread(positions: Sequence[np.ndarray]) -> float:
    """Largest coordinate range over all agents of all species"""
    blocks = getattr(positions, "positions", positions)
    stacked = np.concatenate([np.asarray(b, dtype=float) for b in blocks], axis=0)
    if stacked.size == 0:
        raise InvalidStateError("no agents")
    return float(np.max(stacked.max(axis=0) - stacked.min(axis=0)))


@dataclass(frozen=True)
class Cluster:
    lo: float
    hi: float
    size: int


def opinion_clusters(values: np.ndarray, gap: float) -> List[Cluster]:
    """
    Split sorted one-dimensional opinions wherever consecutive values differ by more than gap.
    """
    data = np.sort(np.asarray(values, dtype=float).reshape(-1))
    if data.size == 0:
        return []
    cuts = np.nonzero(np.diff(data) > gap)[0] + 1
    return [
        Cluster(lo=float(part[0]), hi=float(part[-1]), size=int(part.size))
        for part in np.split(data, cuts)
    ]
