"""Confining potentials, represented by their gradients"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Tuple

import numpy as np

from ..core.exceptions import InvalidStateError


class PotentialForm(str, Enum):
    QUADRATIC_WELL = "quadratic_well"
    NONE = "none"
    CUSTOM = "custom"


@dataclass(frozen=True)
class PotentialSpec:
    """
    External potential V_i.

    convexity_r is the declared strong-convexity constant r_i and growth_q the
    declared polynomial growth exponent q_i of |grad V| + |D^2 V|. Both are
    metadata consumed by validation and the theory constants.
    """
    form: PotentialForm
    center: Tuple[float, ...] = ()
    convexity_r: Optional[float] = 0.0
    growth_q: float = 1.0
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @classmethod
    def quadratic_well(cls, r: float, center) -> "PotentialSpec":
        """grad V(x) = r (x - m)"""
        return cls(
            form=PotentialForm.QUADRATIC_WELL,
            center=tuple(float(c) for c in np.atleast_1d(center)),
            convexity_r=float(r),
            growth_q=1.0,
        )

    @classmethod
    def none(cls) -> "PotentialSpec":
        return cls(form=PotentialForm.NONE, convexity_r=0.0, growth_q=1.0)

    @classmethod
    def custom(
        cls,
        gradient: Callable[[np.ndarray], np.ndarray],
        convexity_r: Optional[float] = None,
        growth_q: float = 1.0,
    ) -> "PotentialSpec":
        return cls(form=PotentialForm.CUSTOM, func=gradient, convexity_r=convexity_r, growth_q=growth_q)

    def gradient(self, x: np.ndarray) -> np.ndarray:
        """Gradient of V at positions of shape (..., d)"""
        if self.form == PotentialForm.NONE:
            return np.zeros_like(x, dtype=float)
        if self.form == PotentialForm.QUADRATIC_WELL:
            return self.convexity_r * (x - np.asarray(self.center, dtype=float))
        result = np.asarray(self.func(x), dtype=float)
        if result.shape != x.shape:
            raise InvalidStateError(f"custom potential gradient returned shape {result.shape}, expected {x.shape}")
        return result

    def to_dict(self) -> dict:
        data = {"form": self.form.value, "convexity_r": self.convexity_r, "growth_q": self.growth_q}
        if self.form == PotentialForm.QUADRATIC_WELL:
            data["center"] = list(self.center)
        return data


def eval_potential_grad(potential: PotentialSpec, x) -> np.ndarray:
    """
    Evaluate grad V_i at one position.

    Raises:
        InvalidStateError: If x has non-finite entries
    """
    vec = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(vec)):
        raise InvalidStateError(f"non-finite potential argument: {vec}")
    return potential.gradient(vec)
