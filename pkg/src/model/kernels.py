"""Interaction kernels K_ij with declared sup-norm and Lipschitz bounds"""

from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence

import numpy as np

from ..core.exceptions import InvalidStateError

# Support cut-off for the bump-type kernels: |y| >= 1 - SUPPORT_EPS evaluates to zero.
SUPPORT_EPS = 1e-12

# max_y |d/dy exp(1 - 1/(1-|y|^2))| is about 2.171 (attained near |y| = 0.76)
BUMP_GRADIENT_SUP = 2.2
# max_y |second derivative| of the same bump stays below 25
BUMP_GRADIENT_LIP = 25.0
# sup_s |phi(s) + s phi'(s)| for phi(s) = exp(1 - 1/(1-|s|^10)) is below 9.4
OPINION_LIP = 9.5


class KernelForm(str, Enum):
    """Built-in kernel families"""
    SCALED_CAUCHY = "scaled_cauchy"
    BUMP_GRADIENT = "bump_gradient"
    OPINION = "opinion"
    ZERO = "zero"
    CUSTOM = "custom"


@dataclass(frozen=True)
class KernelSpec:
    """
    One interaction kernel K_ij.

    ScaledCauchy:  K(x) = Q_i Q_j x / (1 + |x|^2)
    BumpGradient:  K(x) = orientation * grad B^eta(x), B^eta(x) = B(x/eta)/eta,
                   B(y) = D exp(1 - 1/(1 - |y|^2)) on |y| < 1
    Opinion:       K(x) = -D phi(x/R) x, phi(s) = exp(1 - 1/(1 - |s|^10)) on |s| < 1
    """
    form: KernelForm
    charge_i: float = 0.0
    charge_j: float = 0.0
    strength: float = 0.0
    width: float = 1.0
    orientation: float = 1.0
    sup_norm: Optional[float] = 0.0
    lipschitz: Optional[float] = 0.0
    func: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @classmethod
    def zero(cls) -> "KernelSpec":
        return cls(form=KernelForm.ZERO)

    @classmethod
    def scaled_cauchy(cls, charge_i: float, charge_j: float) -> "KernelSpec":
        product = abs(charge_i * charge_j)
        # sup |x|/(1+|x|^2) = 1/2; the Jacobian norm peaks at x = 0 with value 1
        return cls(
            form=KernelForm.SCALED_CAUCHY,
            charge_i=float(charge_i),
            charge_j=float(charge_j),
            sup_norm=0.5 * product,
            lipschitz=product,
        )

    @classmethod
    def bump_gradient(cls, strength: float, eta: float, orientation: float = 1.0) -> "KernelSpec":
        if eta <= 0:
            raise ValueError(f"bump width eta must be positive, got {eta}")
        if orientation not in (1.0, -1.0):
            raise ValueError(f"orientation must be +1 or -1, got {orientation}")
        magnitude = abs(strength)
        return cls(
            form=KernelForm.BUMP_GRADIENT,
            strength=float(strength),
            width=float(eta),
            orientation=float(orientation),
            sup_norm=BUMP_GRADIENT_SUP * magnitude / eta ** 2,
            lipschitz=BUMP_GRADIENT_LIP * magnitude / eta ** 3,
        )

    @classmethod
    def opinion(cls, strength: float, radius: float) -> "KernelSpec":
        if radius <= 0:
            raise ValueError(f"interaction radius must be positive, got {radius}")
        magnitude = abs(strength)
        return cls(
            form=KernelForm.OPINION,
            strength=float(strength),
            width=float(radius),
            sup_norm=magnitude * radius,
            lipschitz=OPINION_LIP * magnitude,
        )

    @classmethod
    def custom(
        cls,
        func: Callable[[np.ndarray], np.ndarray],
        sup_norm: Optional[float] = None,
        lipschitz: Optional[float] = None,
    ) -> "KernelSpec":
        """func maps an (..., d) array of differences to an (..., d) array"""
        return cls(form=KernelForm.CUSTOM, func=func, sup_norm=sup_norm, lipschitz=lipschitz)

    @property
    def is_zero(self) -> bool:
        """True when the kernel vanishes identically (evaluation can be skipped)"""
        if self.form == KernelForm.ZERO:
            return True
        if self.form == KernelForm.SCALED_CAUCHY:
            return self.charge_i * self.charge_j == 0.0
        if self.form in (KernelForm.BUMP_GRADIENT, KernelForm.OPINION):
            return self.strength == 0.0
        return False

    @property
    def declared(self) -> bool:
        """Whether both sup-norm and Lipschitz constants are known"""
        return self.sup_norm is not None and self.lipschitz is not None

    def evaluate(self, diff: np.ndarray) -> np.ndarray:
        """
        Evaluate K on an array of differences x_i^k - x_j^l.

        Args:
            diff: Array of shape (..., d)

        Returns:
            Array of the same shape
        """
        if self.is_zero:
            return np.zeros_like(diff, dtype=float)
        if self.form == KernelForm.SCALED_CAUCHY:
            sq = np.sum(diff * diff, axis=-1, keepdims=True)
            return (self.charge_i * self.charge_j) * diff / (1.0 + sq)
        if self.form == KernelForm.BUMP_GRADIENT:
            return self._bump_gradient(diff)
        if self.form == KernelForm.OPINION:
            return self._opinion(diff)
        result = np.asarray(self.func(diff), dtype=float)
        if result.shape != diff.shape:
            raise InvalidStateError(
                f"custom kernel returned shape {result.shape}, expected {diff.shape}"
            )
        return result

    def _bump_gradient(self, diff: np.ndarray) -> np.ndarray:
        eta = self.width
        sq = np.sum(diff * diff, axis=-1, keepdims=True) / (eta * eta)
        inside = np.sqrt(sq) < 1.0 - SUPPORT_EPS
        gap = np.where(inside, 1.0 - sq, 1.0)
        bump = self.strength * np.exp(1.0 - 1.0 / gap)
        # grad B^eta(x) = eta^-2 grad B(x/eta) = -2 B(y) x / (eta^3 (1-|y|^2)^2)
        factor = np.where(inside, -2.0 * self.orientation * bump / (gap * gap * eta ** 3), 0.0)
        return factor * diff

    def _opinion(self, diff: np.ndarray) -> np.ndarray:
        norm = np.sqrt(np.sum(diff * diff, axis=-1, keepdims=True)) / self.width
        inside = norm < 1.0 - SUPPORT_EPS
        gap = np.where(inside, 1.0 - norm ** 10, 1.0)
        phi = np.where(inside, np.exp(1.0 - 1.0 / gap), 0.0)
        return (-self.strength * phi) * diff

    def to_dict(self) -> dict:
        data = {"form": self.form.value, "sup_norm": self.sup_norm, "lipschitz": self.lipschitz}
        if self.form == KernelForm.SCALED_CAUCHY:
            data.update(charge_i=self.charge_i, charge_j=self.charge_j)
        elif self.form == KernelForm.BUMP_GRADIENT:
            data.update(strength=self.strength, width=self.width, orientation=self.orientation)
        elif self.form == KernelForm.OPINION:
            data.update(strength=self.strength, width=self.width)
        return data


def _check_finite(x: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(x)):
        raise InvalidStateError(f"non-finite {what}: {x}")


def eval_kernel(kernels: Sequence[Sequence[KernelSpec]], i: int, j: int, x) -> np.ndarray:
    """
    Evaluate K_ij at a single difference vector.

    Args:
        kernels: n x n kernel matrix
        i: Target species (0-based)
        j: Source species (0-based)
        x: Vector in R^d

    Returns:
        K_ij(x) as a length-d array
    """
    n = len(kernels)
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError(f"species pair ({i}, {j}) outside 0..{n - 1}")
    vec = np.atleast_1d(np.asarray(x, dtype=float))
    _check_finite(vec, "kernel argument")
    return kernels[i][j].evaluate(vec)
