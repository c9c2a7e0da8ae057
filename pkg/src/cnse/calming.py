"""Calming functions: bounded, Lipschitz-1 truncations of the identity on R^3.

Four kinds are provided::

    rational1     x / (1 + eps|x|)
    rational2     x / (1 + eps^2 |x|^2)
    arctan        arctan(eps x) / eps          (component-wise)
    smooth_trunc  q(|x|) x / |x|               (q: identity, parabolic blend, constant)

Each carries its certified sup-norm, the constants (C, alpha, beta) of the
pointwise estimate ``|zeta(x) - x| <= C eps^alpha |x|^beta`` and whether
``zeta(x)`` is parallel to ``x``.
"""
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .errors import CalmingDomainError


class CalmingKind(str, Enum):
    RATIONAL1 = "rational1"
    RATIONAL2 = "rational2"
    ARCTAN = "arctan"
    SMOOTH_TRUNC = "smooth_trunc"

    @property
    def code(self):
        return _CODES[self]


_CODES = {
    CalmingKind.RATIONAL1: 1,
    CalmingKind.RATIONAL2: 2,
    CalmingKind.ARCTAN: 3,
    CalmingKind.SMOOTH_TRUNC: 4,
}

# (C, alpha, beta) with beta minimal for the stated estimate.
_EXPONENTS = {
    CalmingKind.RATIONAL1: (1.0, 1.0, 2.0),
    CalmingKind.RATIONAL2: (1.0, 2.0, 3.0),
    CalmingKind.ARCTAN: (1.0, 2.0, 3.0),
    CalmingKind.SMOOTH_TRUNC: (1.0, 1.0, 2.0),
}


@dataclass(frozen=True)
class CalmingFunction:
    """One calming function zeta^eps. Immutable and thread-safe."""

    kind: CalmingKind
    epsilon: float

    def __post_init__(self):
        object.__setattr__(self, "kind", CalmingKind(self.kind))
        eps = float(self.epsilon)
        if not (math.isfinite(eps) and eps > 0.0):
            raise ValueError(f"calming epsilon must be a positive finite number, got {self.epsilon!r}")
        object.__setattr__(self, "epsilon", eps)

    def apply(self, x):
        """Evaluate zeta at a 3-vector, or pointwise on an array of shape (3, ...)."""
        arr = np.asarray(x, dtype=np.float64)
        if arr.shape[:1] != (3,):
            raise ValueError(f"expected leading dimension 3, got shape {arr.shape}")
        if not np.isfinite(arr).all():
            bad = np.argwhere(~np.isfinite(arr))[0]
            raise CalmingDomainError(f"non-finite input to {self.kind.value} at index {tuple(bad)}")
        if arr.ndim == 1:
            return kernels.calm(self.kind.code, self.epsilon, arr.reshape(3, 1)).reshape(3)
        return kernels.calm(self.kind.code, self.epsilon, arr)

    __call__ = apply

    def apply_field(self, u):
        """Pointwise lift over a PhysicalField. No projection is performed."""
        from .spectral import PhysicalField

        return PhysicalField(u.grid, self.apply(u.values))

    def linf_bound(self):
        eps = self.epsilon
        if self.kind is CalmingKind.RATIONAL1:
            return 1.0 / eps
        if self.kind is CalmingKind.RATIONAL2:
            return 1.0 / (2.0 * eps)
        if self.kind is CalmingKind.ARCTAN:
            return math.sqrt(3.0) * math.pi / (2.0 * eps)
        return 3.0 / (2.0 * eps)

    def convergence_exponents(self):
        return _EXPONENTS[self.kind]

    def is_parallel(self):
        return self.kind is not CalmingKind.ARCTAN

    def q(self, r):
        """Radial profile of smooth_trunc, evaluated branch by branch."""
        eps = self.epsilon
        r = np.asarray(r, dtype=np.float64)
        t = r - 2.0 / eps
        return np.where(r < 1.0 / eps, r, np.where(r < 2.0 / eps, -0.5 * eps * t * t + 1.5 / eps, 1.5 / eps))

    def with_epsilon(self, epsilon):
        return CalmingFunction(self.kind, epsilon)


def make_calming(kind, epsilon):
    """Build from config values; ``kind="none"`` means plain NSE (returns None)."""
    if kind is None or str(kind).strip().lower() == "none":
        return None
    return CalmingFunction(CalmingKind(str(kind).strip().lower()), float(epsilon))
