"""Additive and multiplicative diffusion coefficients sigma_i"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Dict, Optional

import numpy as np

from ..core.exceptions import ConfigurationError, InvalidStateError


class DiffusionForm(str, Enum):
    ADDITIVE = "additive"
    MULTIPLICATIVE = "multiplicative"


def _constant(scale: float, norm_sq: np.ndarray) -> np.ndarray:
    return np.full(norm_sq.shape, scale)


def _inverse_sqrt(scale: float, norm_sq: np.ndarray) -> np.ndarray:
    return scale / np.sqrt(1.0 + norm_sq)


def _tanh_bounded(scale: float, norm_sq: np.ndarray) -> np.ndarray:
    t = np.tanh(np.sqrt(norm_sq))
    return scale * np.sqrt(2.0 - t * t)


# profile name -> (sigma(scale, |x|^2), Lipschitz per unit scale, sup per unit scale)
PROFILES: Dict[str, tuple] = {
    "constant": (_constant, 0.0, 1.0),
    "inverse_sqrt": (_inverse_sqrt, 0.385, 1.0),
    "tanh_bounded": (_tanh_bounded, 0.31, 2.0 ** 0.5),
}


@dataclass(frozen=True)
class DiffusionSpec:
    """
    Diffusion coefficient of one species.

    Additive: constant sigma >= 0. Multiplicative: sigma(x) from a named
    profile scaled by `sigma`, or from a custom callable, with declared
    Lipschitz constant and sup bound.
    """
    form: DiffusionForm
    sigma: float = 0.0
    profile: Optional[str] = None
    lipschitz: Optional[float] = None
    sup_bound: Optional[float] = None
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @classmethod
    def additive(cls, sigma: float) -> "DiffusionSpec":
        return cls(form=DiffusionForm.ADDITIVE, sigma=float(sigma), lipschitz=0.0, sup_bound=float(sigma))

    @classmethod
    def multiplicative(cls, profile: str, scale: float) -> "DiffusionSpec":
        if profile not in PROFILES:
            raise ConfigurationError(f"unknown diffusion profile '{profile}' (expected one of {sorted(PROFILES)})")
        _, lip, sup = PROFILES[profile]
        return cls(
            form=DiffusionForm.MULTIPLICATIVE,
            sigma=float(scale),
            profile=profile,
            lipschitz=lip * abs(scale),
            sup_bound=sup * abs(scale),
        )

    @classmethod
    def custom(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        lipschitz: Optional[float] = None,
        sup_bound: Optional[float] = None,
    ) -> "DiffusionSpec":
        """func maps positions (N, d) to sigma values (N,)"""
        return cls(form=DiffusionForm.MULTIPLICATIVE, func=func, lipschitz=lipschitz, sup_bound=sup_bound)

    @property
    def is_additive(self) -> bool:
        return self.form == DiffusionForm.ADDITIVE

    def evaluate(self, positions: np.ndarray):
        """
        sigma at positions of shape (N, d).

        Returns:
            The scalar sigma for the additive form, an (N,) array otherwise
        """
        if self.is_additive:
            return self.sigma
        if self.profile is not None:
            fn = PROFILES[self.profile][0]
            return fn(self.sigma, np.sum(positions * positions, axis=-1))
        values = np.asarray(self.func(positions), dtype=float).reshape(positions.shape[:-1])
        if np.any(values < 0):
            raise ConfigurationError("custom diffusion callable returned a negative value")
        return values

    def to_dict(self) -> dict:
        data = {"form": self.form.value, "sigma": self.sigma}
        if self.profile is not None:
            data["profile"] = self.profile
        data.update(lipschitz=self.lipschitz, sup_bound=self.sup_bound)
        return data


def eval_diffusion(diffusion: DiffusionSpec, x) -> float:
    """
    sigma_i at one position.

    Raises:
        InvalidStateError: Non-finite position
        ConfigurationError: Negative value from a custom callable
    """
    vec = np.atleast_1d(np.asarray(x, dtype=float))
    if not np.all(np.isfinite(vec)):
        raise InvalidStateError(f"non-finite diffusion argument: {vec}")
    if diffusion.is_additive:
        return float(diffusion.sigma)
    return float(np.asarray(diffusion.evaluate(vec[None, :])).reshape(-1)[0])
