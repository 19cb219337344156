"""Compactly supported kernel densities on the unit ball of R^d.

All profiles are radial polynomials c * (1 - ||u||^2)^s restricted to the
open unit ball, normalized in closed form so no quadrature runs in hot
loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

PROFILES = ("epanechnikov_ball", "biweight_ball", "uniform_ball")

# polynomial degree s of (1 - ||u||^2)^s per profile
_DEGREE = {"epanechnikov_ball": 1, "biweight_ball": 2, "uniform_ball": 0}

_ALIASES = {
    "epanechnikov": "epanechnikov_ball",
    "biweight": "biweight_ball",
    "uniform": "uniform_ball",
}


def _norm_const(s: int, d: int) -> float:
    # integral of (1 - ||u||^2)^s over the unit ball is pi^(d/2) Gamma(s+1) / Gamma(s+1+d/2)
    return math.gamma(s + 1 + d / 2) / (math.pi ** (d / 2) * math.gamma(s + 1))


@dataclass(frozen=True)
class KernelSpec:
    """Probability density supported in the unit ball of R^dimension.

    ``uniform_ball`` is discontinuous at the ball boundary and therefore
    not Lipschitz; it is kept for oracle comparisons only and should not
    be used in estimator configurations.
    """

    profile: str = "epanechnikov_ball"
    dimension: int = 1

    def __post_init__(self) -> None:
        if self.profile not in _DEGREE:
            raise ValueError(f"unknown kernel profile {self.profile!r}; choose from {PROFILES}")
        if int(self.dimension) != self.dimension or self.dimension < 1:
            raise ValueError("dimension must be a positive integer")

    @property
    def degree(self) -> int:
        return _DEGREE[self.profile]

    @property
    def normalization(self) -> float:
        return _norm_const(self.degree, self.dimension)

    @property
    def is_smooth(self) -> bool:
        """False for the flat profile, which jumps at the ball boundary."""
        return self.profile != "uniform_ball"

    @property
    def lipschitz_constant(self) -> float:
        """Bound on |K(u) - K(v)| / ||u - v||; infinite for the flat profile."""
        s, c = self.degree, self.normalization
        if s == 0:
            return math.inf
        if s == 1:
            return 2.0 * c
        # |d/dr (1 - r^2)^s| = 2 s c r (1 - r^2)^(s-1), maximal at r = 1/sqrt(2s - 1)
        r = 1.0 / math.sqrt(2 * s - 1)
        return 2.0 * s * c * r * (1.0 - r * r) ** (s - 1)

    def density(self, u):
        """K(u) for a point of shape (d,) or a batch of shape (n, d)."""
        u = np.asarray(u, dtype=float)
        single = u.ndim == 1
        u2 = np.atleast_2d(u)
        if u2.shape[1] != self.dimension:
            raise ValueError(f"points have dimension {u2.shape[1]}, kernel expects {self.dimension}")
        r2 = np.sum(u2**2, axis=1)
        inside = r2 < 1.0
        s = self.degree
        if s == 0:
            vals = self.normalization * inside.astype(float)
        else:
            vals = self.normalization * np.where(inside, 1.0 - r2, 0.0) ** s
        return float(vals[0]) if single else vals

    def scaled_density(self, x, xs, h: float):
        """Rescaled kernel h^(-d) K((x - xs) / h) with bandwidth h > 0."""
        if not h > 0:
            raise ValueError("bandwidth h must be positive")
        x = np.asarray(x, dtype=float)
        xs = np.asarray(xs, dtype=float)
        return self.density((x - xs) / h) / h**self.dimension


def kernel_from_name(name: str, dimension: int) -> KernelSpec:
    """Resolve a CLI-style kernel name ('epanechnikov', ...) to a KernelSpec."""
    return KernelSpec(profile=_ALIASES.get(name, name), dimension=dimension)
