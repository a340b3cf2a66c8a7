"""Lattice states, model parameters and initial conditions.

Site indices are 1-based wherever a user names a site (``j0``, ``site``);
arrays are 0-based internally.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import InvalidParameterError, ShapeError, SiteIndexError, DomainError


class Ordering(enum.Enum):
    NO = "no"
    SO = "so"

    @classmethod
    def parse(cls, value) -> "Ordering":
        if isinstance(value, Ordering):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise InvalidParameterError(
                f"ordering must be one of 'no', 'so' (got {value!r})"
            ) from None


def _frozen_array(values, dtype) -> np.ndarray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class BosonLatticeState:
    """Boson coherent-state labels, one complex amplitude per site."""

    amplitudes: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(np.atleast_1d(self.amplitudes), complex)
        if arr.ndim != 1 or arr.size < 1:
            raise ShapeError("a lattice state needs a 1-d sequence of at least one amplitude")
        if not np.all(np.isfinite(arr)):
            raise DomainError("lattice amplitudes must be finite")
        object.__setattr__(self, "amplitudes", arr)

    def __len__(self):
        return self.amplitudes.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.amplitudes, dtype=dtype)

    @property
    def f(self) -> int:
        return self.amplitudes.size


@dataclass(frozen=True)
class SpinLatticeState:
    """Stereographic coordinates of spin-1/2 coherent states, one per site.

    The north pole (z = infinity) has no finite coordinate and is rejected.
    """

    coords: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(np.atleast_1d(self.coords), complex)
        if arr.ndim != 1 or arr.size < 1:
            raise ShapeError("a spin lattice state needs a 1-d sequence of at least one coordinate")
        if not np.all(np.isfinite(arr)):
            raise DomainError("stereographic coordinates must be finite (north pole is not representable)")
        object.__setattr__(self, "coords", arr)

    def __len__(self):
        return self.coords.size

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    @property
    def f(self) -> int:
        return self.coords.size


@dataclass(frozen=True)
class CouplingMatrix:
    """Dense real symmetric hopping matrix with zero diagonal."""

    entries: np.ndarray

    def __post_init__(self):
        arr = _frozen_array(self.entries, float)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise ShapeError(f"coupling matrix must be square, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidParameterError("coupling entries must be finite")
        if np.any(np.diag(arr) != 0.0):
            raise InvalidParameterError("coupling matrix must have a zero diagonal")
        scale = max(1.0, float(np.max(np.abs(arr))))
        if np.max(np.abs(arr - arr.T)) > 1e-12 * scale:
            raise InvalidParameterError("coupling matrix must be symmetric (asymmetric hopping is not Hermitian)")
        object.__setattr__(self, "entries", arr)

    @property
    def f(self) -> int:
        return self.entries.shape[0]


@dataclass(frozen=True)
class SoCoefficients:
    mu: tuple

    def __len__(self):
        return len(self.mu)

    def __iter__(self):
        return iter(self.mu)

    def __getitem__(self, n):
        return self.mu[n]


@dataclass(frozen=True)
class GdstParams:
    omega0: float
    gamma: float
    m: int
    coupling: CouplingMatrix
    ordering: Ordering = Ordering.NO

    def __post_init__(self):
        if isinstance(self.m, bool) or int(self.m) != self.m or self.m < 2:
            raise InvalidParameterError(f"m: nonlinearity order must be an integer >= 2 (got {self.m!r})")
        for name in ("omega0", "gamma"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParameterError(f"{name} must be finite")
        if not isinstance(self.coupling, CouplingMatrix):
            object.__setattr__(self, "coupling", CouplingMatrix(self.coupling))
        object.__setattr__(self, "m", int(self.m))
        object.__setattr__(self, "ordering", Ordering.parse(self.ordering))

    @property
    def f(self) -> int:
        return self.coupling.f

    def with_gamma(self, gamma: float) -> "GdstParams":
        return GdstParams(self.omega0, gamma, self.m, self.coupling, self.ordering)

    def with_ordering(self, ordering) -> "GdstParams":
        return GdstParams(self.omega0, self.gamma, self.m, self.coupling, Ordering.parse(ordering))


@dataclass(frozen=True)
class MdnlsParams:
    v: float
    x: float
    f: int
    ordering: Ordering = Ordering.NO

    def __post_init__(self):
        if int(self.f) != self.f or self.f < 3:
            # j-1 and j+1 coincide on a two-site ring
            raise InvalidParameterError(f"f: MDNLS ring needs at least 3 sites (got {self.f!r})")
        object.__setattr__(self, "f", int(self.f))
        object.__setattr__(self, "ordering", Ordering.parse(self.ordering))

    def with_ordering(self, ordering) -> "MdnlsParams":
        return MdnlsParams(self.v, self.x, self.f, Ordering.parse(ordering))


@dataclass(frozen=True)
class XxzParams:
    """XXZ ring parameters.

    ``onsite_energy`` is the fermion on-site energy entering the optional
    linear term ``(onsite_energy + v) * sum_j sigma^z_j``.
    """

    v: float
    g: float
    f: int
    include_linear_term: bool = False
    onsite_energy: float = 0.0

    def __post_init__(self):
        if int(self.f) != self.f or self.f < 3:
            raise InvalidParameterError(f"f: XXZ ring needs at least 3 sites (got {self.f!r})")
        object.__setattr__(self, "f", int(self.f))


@lru_cache(maxsize=None)
def _so_mu(m: int) -> tuple:
    pref = math.factorial(m - 1) / 2.0**m
    return tuple(
        pref * math.comb(m, m - n) * 2.0**n / math.factorial(n) for n in range(1, m)
    )


def so_coefficients(m: int) -> SoCoefficients:
    """Coefficients of the extra ``b^dag^n b^n`` terms from symmetric ordering.

    mu_n = (m-1)!/2^m * C(m, m-n) * 2^n / n!,   n = 1 .. m-1
    """
    if isinstance(m, bool) or int(m) != m or m < 1:
        raise InvalidParameterError(f"m must be an integer >= 1 (got {m!r})")
    return SoCoefficients(_so_mu(int(m)))


def nearest_neighbor_ring(f: int, lam: float) -> CouplingMatrix:
    if int(f) != f or f < 2:
        raise InvalidParameterError(f"f must be an integer >= 2 (got {f!r})")
    f = int(f)
    entries = np.zeros((f, f))
    for j in range(f):
        entries[j, (j + 1) % f] = lam
        entries[j, (j - 1) % f] = lam
    return CouplingMatrix(entries)


def check_site(j: int, f: int) -> int:
    """Validate a 1-based site index and return the 0-based position."""
    if isinstance(j, bool) or int(j) != j or not 1 <= j <= f:
        raise SiteIndexError(f"site index {j!r} out of range 1..{f}")
    return int(j) - 1


def single_site_excitation(f: int, j0: int, n_total: float) -> BosonLatticeState:
    if int(f) != f or f < 1:
        raise InvalidParameterError(f"f must be a positive integer (got {f!r})")
    if n_total < 0:
        raise InvalidParameterError(f"n_total must be non-negative (got {n_total!r})")
    k = check_site(j0, int(f))
    beta = np.zeros(int(f), dtype=complex)
    beta[k] = math.sqrt(n_total)
    return BosonLatticeState(beta)


def amplitudes_of(state) -> np.ndarray:
    """Plain complex array view of a state object or array-like."""
    if isinstance(state, BosonLatticeState):
        return state.amplitudes
    if isinstance(state, SpinLatticeState):
        return state.coords
    return np.asarray(state, dtype=complex)
