"""Discrete L2(Omega) error, error series and log-log slope fitting"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..core.exceptions import ConfigurationError, InvalidStateError
from ..core.logger import logger

MIN_SLOPE_POINTS = 3


def squared_l2_error(first: Sequence[np.ndarray], second: Sequence[np.ndarray]) -> float:
    """sum_i (1/N_i) sum_k |A_i^k - B_i^k|^2, pairing particles by index"""
    if len(first) != len(second):
        raise InvalidStateError(f"states have {len(first)} and {len(second)} species")
    total = 0.0
    for i, (a, b) in enumerate(zip(first, second)):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != b.shape:
            raise InvalidStateError(f"species {i + 1}: shapes {a.shape} and {b.shape} differ")
        diff = a - b
        total += float(np.sum(diff * diff)) / a.shape[0]
    return total


def discrete_l2_error(first, second) -> float:
    """
    E = (sum_i (1/N_i) sum_k |A_i^k - B_i^k|^2)^(1/2).

    Accepts ParticleState objects or per-species position sequences.
    """
    a = getattr(first, "positions", first)
    b = getattr(second, "positions", second)
    return float(np.sqrt(squared_l2_error(a, b)))


@dataclass(frozen=True)
class SlopeFit:
    slope: float
    intercept: float
    residual: float
    points: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "residual": self.residual, "points": self.points}


def convergence_slope(pairs: Sequence[Tuple[float, float]]) -> Optional[SlopeFit]:
    """
    Ordinary least squares of ln E against ln tau.

    Zero errors are dropped with a warning; None is returned when fewer than
    three positive points remain.

    Raises:
        ConfigurationError: Fewer than three (tau, E) pairs supplied
    """
    if len(pairs) < MIN_SLOPE_POINTS:
        raise ConfigurationError(f"need >= {MIN_SLOPE_POINTS} step sizes for a slope fit, got {len(pairs)}")
    log = logger.get_logger()
    kept = []
    for tau, error in pairs:
        if error < 0 or not np.isfinite(error):
            raise InvalidStateError(f"error values must be finite and non-negative, got {error}")
        if error == 0:
            log.warning(f"Excluding tau={tau:g} from the slope fit: error is exactly zero")
            continue
        kept.append((tau, error))
    if len(kept) < MIN_SLOPE_POINTS:
        log.warning(f"Slope fit refused: only {len(kept)} positive error values")
        return None
    x = np.log([tau for tau, _ in kept])
    y = np.log([error for _, error in kept])
    design = np.vstack([x, np.ones_like(x)]).T
    (slope, intercept), _, _, _ = np.linalg.lstsq(design, y, rcond=None)
    fitted = slope * x + intercept
    residual = float(np.sqrt(np.mean((y - fitted) ** 2)))
    return SlopeFit(slope=float(slope), intercept=float(intercept), residual=residual, points=len(kept))


@dataclass(frozen=True)
class ErrorPoint:
    tau: float
    mean_error: float
    std_error: float


def summarize_replicas(squared_errors: Sequence[float]) -> Tuple[float, float]:
    """
    Replica mean of the L2(Omega) error and its standard error.

    mean = sqrt(mean_r e_r^2); the standard error propagates the standard
    error of the mean square through the square root.
    """
    values = np.asarray(squared_errors, dtype=float)
    mean_square = float(values.mean())
    mean_error = float(np.sqrt(mean_square))
    if values.size < 2 or mean_square == 0.0:
        return mean_error, 0.0
    se_square = float(values.std(ddof=1)) / np.sqrt(values.size)
    return mean_error, se_square / (2.0 * mean_error)


@dataclass
class ErrorSeries:
    """Coupled full vs random-batch error per step size, tau strictly decreasing"""
    points: List[ErrorPoint]
    replicas: int
    seed: int
    refinement: int
    fit: Optional[SlopeFit] = None
    profile: Dict[float, List[Tuple[float, float]]] = field(default_factory=dict)
    batch_sizes: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        taus = [p.tau for p in self.points]
        if any(b >= a for a, b in zip(taus, taus[1:])):
            raise InvalidStateError(f"step sizes must be strictly decreasing, got {taus}")
        if any(p.mean_error < 0 for p in self.points):
            raise InvalidStateError("errors must be non-negative")

    @property
    def taus(self) -> List[float]:
        return [p.tau for p in self.points]

    @property
    def errors(self) -> List[float]:
        return [p.mean_error for p in self.points]

    @property
    def slope(self) -> Optional[float]:
        return None if self.fit is None else self.fit.slope

    def csv_rows(self) -> List[Tuple[float, float, float]]:
        return [(p.tau, p.mean_error, p.std_error) for p in self.points]

    def to_dict(self) -> dict:
        return {
            "points": [
                {"tau": p.tau, "mean_error": p.mean_error, "std_error": p.std_error} for p in self.points
            ],
            "fit": None if self.fit is None else self.fit.to_dict(),
            "replicas": self.replicas,
            "seed": self.seed,
            "ref_refinement": self.refinement,
            "batch_sizes": list(self.batch_sizes),
            "profile": [
                {"tau": tau, "times": [t for t, _ in rows], "mean_error": [e for _, e in rows]}
                for tau, rows in sorted(self.profile.items(), reverse=True)
            ],
        }
