"""Overlaps, ray distance, metric and curvature of coherent-state manifolds.

Both manifolds here are radial: the unnormalized-state norm depends only on
u = |z|^2, and the metric follows from it as

    g(u) = d/du [ u * d(ln n)/du ].
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DomainError, InvalidParameterError, NumericalDegeneracyError


def _check_spin(j: float) -> float:
    two_j = 2.0 * j
    if not (two_j > 0 and abs(two_j - round(two_j)) < 1e-12):
        raise InvalidParameterError(f"j must be a positive half-integer (got {j!r})")
    return round(two_j) / 2.0


@dataclass(frozen=True)
class NormalizationFunction:
    """Squared norm n(u) of the unnormalized coherent state, u = |z|^2.

    ``log_n`` is required. ``metric_closed`` is the registered closed-form
    metric; when absent the metric is obtained by finite differences.
    """

    name: str
    log_n: Callable[[float], float]
    metric_closed: Optional[Callable[[float], float]] = None

    def __call__(self, u: float) -> float:
        return math.exp(self.log_n(u))


def weyl_heisenberg() -> NormalizationFunction:
    return NormalizationFunction("weyl-heisenberg", lambda u: u, lambda u: 1.0)


def su2(j: float) -> NormalizationFunction:
    j = _check_spin(j)
    return NormalizationFunction(
        f"su2(j={j:g})",
        lambda u: 2.0 * j * math.log1p(u),
        lambda u: 2.0 * j / (1.0 + u) ** 2,
    )


def boson_overlap(a1: complex, a2: complex) -> complex:
    return cmath.exp(-0.5 * abs(a1) ** 2 - 0.5 * abs(a2) ** 2 + a1.conjugate() * a2)


def su2_log_overlap(z1: complex, z2: complex, j: float) -> complex:
    j = _check_spin(j)
    w = 1.0 + complex(z1).conjugate() * complex(z2)
    if w == 0:
        return complex(-math.inf, 0.0)
    return 2.0 * j * cmath.log(w) - j * math.log1p(abs(z1) ** 2) - j * math.log1p(abs(z2) ** 2)


def su2_overlap(z1: complex, z2: complex, j: float) -> complex:
    """<z1|z2> for su(2) coherent states, evaluated in log space."""
    lo = su2_log_overlap(z1, z2, j)
    if math.isinf(lo.real):
        return 0j
    return cmath.exp(lo)


def ray_distance(overlap_mod: float) -> float:
    """Distance between rays with |<z1|z2>| = overlap_mod: D^2 = 2 - 2|<z1|z2>|."""
    if not 0.0 <= overlap_mod <= 1.0:
        if -1e-12 < overlap_mod < 0.0 or 1.0 < overlap_mod < 1.0 + 1e-12:
            overlap_mod = min(max(overlap_mod, 0.0), 1.0)
        else:
            raise DomainError(f"overlap modulus must lie in [0, 1] (got {overlap_mod!r})")
    return math.sqrt(2.0 - 2.0 * overlap_mod)


def ray_distance_sq_from_log(log_overlap_mod: float) -> float:
    """D^2 from ln|<z1|z2>|, accurate for nearly coincident rays."""
    return -2.0 * math.expm1(min(log_overlap_mod, 0.0))


def _central(fn, x, h):
    # five-point stencil, error O(h^4)
    return (-fn(x + 2 * h) + 8 * fn(x + h) - 8 * fn(x - h) + fn(x - 2 * h)) / (12 * h)


def metric_numeric(n: NormalizationFunction, u: float) -> float:
    """g(u) by nested central differences of ln n.

    The inner derivative uses step max(1e-5, 1e-5 u); the outer one a wider
    step max(1e-3, 1e-3 u) so roundoff from the inner stage is not amplified.
    """
    h_in = max(1e-5, 1e-5 * u)
    h_out = max(1e-3, 1e-3 * u)

    def radial_flux(v):
        return v * _central(n.log_n, v, h_in)

    return _central(radial_flux, u, h_out)


def metric(n: NormalizationFunction, z: complex, numeric: bool = False) -> float:
    u = abs(z) ** 2
    if n.metric_closed is not None and not numeric:
        g = n.metric_closed(u)
    else:
        g = metric_numeric(n, u)
    if not g > 0:
        raise NumericalDegeneracyError(f"metric is not positive at z={z!r} (g={g!r})")
    return float(g)


def curvature(n: NormalizationFunction, z: complex, step: float = 1e-2) -> float:
    """Curvature scalar R = -(1/g) d_z d_zbar ln g.

    d_z d_zbar = (1/4) Laplacian in (x, y); the Laplacian of ln g is taken
    with a fourth-order stencil (+-h, +-2h along each axis) of spacing
    ``step * max(1, |z|)``.
    """
    z = complex(z)
    h = step * max(1.0, abs(z))

    def log_g(w):
        return math.log(metric(n, w))

    centre = log_g(z)
    lap = 0.0
    for d in (h, 1j * h):
        lap += (
            -log_g(z + 2 * d) + 16 * log_g(z + d) - 30 * centre + 16 * log_g(z - d) - log_g(z - 2 * d)
        ) / (12 * h**2)
    return float(-0.25 * lap / metric(n, z))


@dataclass(frozen=True)
class Su2Symbols:
    jp: complex
    jm: complex
    j0: float
    jmjp: float


def su2_symbols(z: complex, j: float) -> Su2Symbols:
    j = _check_spin(j)
    z = complex(z)
    u = abs(z) ** 2
    d = 1.0 + u
    return Su2Symbols(
        jp=2.0 * j * z.conjugate() / d,
        jm=2.0 * j * z / d,
        j0=-j * (1.0 - u) / d,
        jmjp=(4.0 * j * j * u + 2.0 * j) / d**2,
    )


def symplectic_density(z: complex, j: float) -> float:
    """<J-J+> - <J-><J+>, equal to 2j / (1 + |z|^2)^2."""
    s = su2_symbols(z, j)
    return float(s.jmjp - (s.jm * s.jp).real)


def random_points(rng: np.random.Generator, count: int, radius: float) -> np.ndarray:
    """Uniform samples from the disc |z| <= radius."""
    r = radius * np.sqrt(rng.uniform(size=count))
    phi = rng.uniform(0.0, 2.0 * math.pi, size=count)
    return r * np.exp(1j * phi)
