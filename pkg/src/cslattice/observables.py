"""Conserved symbols, phase-space distributions and self-trapping diagnostics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketingError, InvalidParameterError, ShapeError
from .lattice import (
    GdstParams,
    MdnlsParams,
    Ordering,
    XxzParams,
    amplitudes_of,
    check_site,
    single_site_excitation,
    so_coefficients,
)


# -- conserved symbols ------------------------------------------------------

def boson_norm(state) -> float:
    b = amplitudes_of(state)
    return float(np.sum(b.real**2 + b.imag**2))


def gdst_energy(state, p: GdstParams) -> float:
    b = amplitudes_of(state)
    lam = p.coupling.entries
    if b.shape != (lam.shape[0],):
        raise ShapeError(f"state has {b.size} sites but coupling is {lam.shape[0]}x{lam.shape[0]}")
    u = b.real**2 + b.imag**2
    energy = np.sum(p.omega0 * u - (p.gamma / p.m) * u**p.m)
    # lam symmetric, so sum_{k != l} lam_kl b_k conj(b_l) is real
    energy -= float(np.real(np.conj(b) @ lam @ b))
    if p.ordering is Ordering.SO:
        for n, mu in enumerate(so_coefficients(p.m), start=1):
            energy -= p.gamma * mu * np.sum(u**n)
    return float(energy)


def mdnls_energy(state, p: MdnlsParams) -> float:
    a = amplitudes_of(state)
    if a.shape != (p.f,):
        raise ShapeError(f"state has {a.size} sites, params expect {p.f}")
    u = a.real**2 + a.imag**2
    right = np.roll(a, -1)
    hop = 2.0 * np.sum(np.real(a * np.conj(right)))
    energy = p.v * hop - p.x * np.sum(np.roll(u, -1) * np.roll(u, -2) + u**2)
    if p.ordering is Ordering.SO:
        energy -= 1.5 * p.x * np.sum(u)
    return float(energy)


def _sz(z: np.ndarray) -> np.ndarray:
    u = z.real**2 + z.imag**2
    return (u - 1.0) / (2.0 * (1.0 + u))


def xxz_energy_symbol(state, p: XxzParams) -> float:
    """Coherent-state symbol of the XXZ ring Hamiltonian (spin 1/2)."""
    z = amplitudes_of(state)
    if z.shape != (p.f,):
        raise ShapeError(f"state has {z.size} sites, params expect {p.f}")
    sz = _sz(z)
    pp = 1.0 + z.real**2 + z.imag**2
    zr = np.roll(z, -1)
    # <s+_j s-_{j+1} + s-_j s+_{j+1}> = 2 Re(conj(z_j) z_{j+1}) / (P_j P_{j+1})
    flip = 2.0 * np.real(np.conj(z) * zr) / (pp * np.roll(pp, -1))
    energy = p.v * np.sum(sz * np.roll(sz, -1)) - p.g * np.sum(flip)
    if p.include_linear_term:
        energy += (p.onsite_energy + p.v) * np.sum(sz)
    return float(energy)


def total_sz_symbol(state) -> float:
    return float(np.sum(_sz(amplitudes_of(state))))


# -- distributions ----------------------------------------------------------

@dataclass(frozen=True)
class QFunctionField:
    grid_x: np.ndarray
    grid_y: np.ndarray
    values: np.ndarray  # values[iy, ix]

    @property
    def cell_area(self) -> float:
        dx = self.grid_x[1] - self.grid_x[0] if self.grid_x.size > 1 else 1.0
        dy = self.grid_y[1] - self.grid_y[0] if self.grid_y.size > 1 else 1.0
        return float(dx * dy)

    def integral(self) -> float:
        return float(np.sum(self.values) * self.cell_area)

    def argmax(self) -> tuple:
        iy, ix = np.unravel_index(np.argmax(self.values), self.values.shape)
        return float(self.grid_x[ix]), float(self.grid_y[iy])


def default_q_grid(beta: complex, spacing: float = 0.05):
    """Square window centred on ``beta`` with half-width at least max(6, |beta| + 6).

    ``beta`` itself is a grid node, so the sampled peak is exactly 1/pi.
    """
    beta = complex(beta)
    half = max(6.0, abs(beta) + 6.0)
    k = spacing * np.arange(-math.ceil(half / spacing), math.ceil(half / spacing) + 1)
    return beta.real + k, beta.imag + k


def q_function(beta_j: complex, grid_x=None, grid_y=None) -> QFunctionField:
    """Husimi Q-function of a single-mode coherent state on a regular grid."""
    beta_j = complex(beta_j)
    if grid_x is None and grid_y is None:
        grid_x, grid_y = default_q_grid(beta_j)
    gx = np.asarray(grid_x, dtype=float)
    gy = np.asarray(grid_y, dtype=float)
    if gx.size == 0 or gy.size == 0:
        raise InvalidParameterError("Q-function grid must not be empty")
    for g in (gx, gy):
        if g.size > 2 and not np.allclose(np.diff(g), g[1] - g[0], rtol=1e-9, atol=1e-12):
            raise InvalidParameterError("Q-function grids must be regular")
    xx, yy = np.meshgrid(gx, gy)
    values = np.exp(-((xx - beta_j.real) ** 2) - (yy - beta_j.imag) ** 2) / math.pi
    return QFunctionField(gx, gy, values)


@dataclass(frozen=True)
class PoissonDist:
    probs: np.ndarray
    tail_mass: float

    def mean(self) -> float:
        return float(np.sum(np.arange(self.probs.size) * self.probs))


def poisson_distribution(beta_j: complex, n_max: int) -> PoissonDist:
    """Number-state populations of a coherent state, P_n for n = 0..n_max."""
    if int(n_max) != n_max or n_max < 0:
        raise InvalidParameterError(f"n_max must be a non-negative integer (got {n_max!r})")
    mean = abs(complex(beta_j)) ** 2
    probs = np.empty(int(n_max) + 1)
    probs[0] = math.exp(-mean)
    for n in range(int(n_max)):
        probs[n + 1] = probs[n] * mean / (n + 1)
    tail = max(0.0, 1.0 - math.fsum(probs))
    return PoissonDist(probs, tail)


# -- self-trapping ----------------------------------------------------------

def gamma_cr_analytic(n_total: float, ordering, lam: float = 1.0, m: int = 3) -> float:
    """Critical nonlinearity for self-trapping in the single-site-excited dimer.

    The trapping condition is (gamma_cubic + N gamma_quintic) / lam > 4 / N.
    Quintic (m=3): NO gives 4 lam / N^2, SO gives 4 lam / (N (N + 3)).
    Cubic (m=2): 4 lam / N for both orderings.
    """
    if not n_total > 0:
        raise InvalidParameterError(f"n_total must be positive (got {n_total!r})")
    ordering = Ordering.parse(ordering)
    if m == 3:
        cubic = 3.0 if ordering is Ordering.SO else 0.0  # 2 * mu_2^(3) from the SO terms
        return 4.0 * lam / (n_total * (n_total + cubic))
    if m == 2:
        return 4.0 * lam / n_total
    raise InvalidParameterError(f"no closed-form threshold for m={m}")


def population_imbalance(state) -> float:
    b = amplitudes_of(state)
    if b.size != 2:
        raise ShapeError(f"population imbalance is defined for the dimer only (f={b.size})")
    u = b.real**2 + b.imag**2
    return float(u[0] - u[1])


def is_self_trapped(traj, j0: int, n_total: float) -> bool:
    """True iff |beta_j0|^2 > N/2 at every sample of the trajectory."""
    check_site(j0, traj.states.shape[1])
    return bool(np.all(traj.occupation(j0) > 0.5 * n_total))


def _beat_period(template: GdstParams) -> float:
    lam = float(np.max(np.abs(template.coupling.entries)))
    if lam == 0.0:
        raise InvalidParameterError("threshold search needs a non-zero coupling")
    return 2.0 * math.pi / (2.0 * lam)


def gamma_cr_numeric(
    template: GdstParams,
    n_total: float,
    horizon: float | None = None,
    tol: float | None = None,
    bracket: tuple | None = None,
    j0: int = 1,
    samples_per_period: int = 40,
    rel_tol: float = 1e-9,
    abs_tol: float = 1e-9,
) -> float:
    """Smallest gamma for which a single-site excitation stays self-trapped.

    Bisection on gamma with :func:`is_self_trapped` as the predicate. The
    default horizon is 20 linear beat periods 2*pi/(2*lam). Without a
    ``bracket`` one is found by doubling/halving from lam / N^(m-1). ``tol``
    is the final absolute bracket width (default 1e-4 of the upper end).
    The threshold scales linearly with lam.
    """
    from .dynamics import IntegratorConfig, gdst_rhs, integrate

    if not n_total > 0:
        raise InvalidParameterError(f"n_total must be positive (got {n_total!r})")
    period = _beat_period(template)
    if horizon is None:
        horizon = 20.0 * period
    cfg = IntegratorConfig.uniform(horizon, period / samples_per_period, rel_tol=rel_tol, abs_tol=abs_tol)
    psi0 = single_site_excitation(template.f, j0, n_total)

    def trapped(gamma):
        p = template.with_gamma(gamma)
        return is_self_trapped(integrate(gdst_rhs, psi0, cfg, p), j0, n_total)

    if bracket is not None:
        lo, hi = map(float, bracket)
        if not lo < hi:
            raise InvalidParameterError("bracket must satisfy lo < hi")
        if trapped(lo) or not trapped(hi):
            raise BracketingError(f"self-trapping does not switch on inside [{lo}, {hi}]")
    else:
        lam = math.pi / period
        guess = lam / n_total ** (template.m - 1)
        if trapped(guess):
            hi, lo = guess, guess / 2
            for _ in range(60):
                if not trapped(lo):
                    break
                hi, lo = lo, lo / 2
            else:
                raise BracketingError("trapped for every gamma tried down to 2^-60 of the initial guess")
        else:
            lo, hi = guess, 2 * guess
            for _ in range(60):
                if trapped(hi):
                    break
                lo, hi = hi, 2 * hi
            else:
                raise BracketingError("no self-trapping found up to 2^60 times the initial guess")
    if tol is None:
        tol = 1e-4 * hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if trapped(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


# -- Jordan-Wigner fermion observables --------------------------------------

def fermion_amplitude(state, j: int) -> complex:
    """<a^dag_j> on the spin coherent product state.

    String factor prod_{k<j} (-2<s^z_k>) = prod (1 - |z_k|^2)/(1 + |z_k|^2),
    times <s^+_j> = conj(z_j)/(1 + |z_j|^2).
    """
    z = amplitudes_of(state)
    k = check_site(j, z.size)
    u = z.real**2 + z.imag**2
    string = float(np.prod((1.0 - u[:k]) / (1.0 + u[:k])))
    return complex(string * np.conj(z[k]) / (1.0 + u[k]))


def fermion_number(state, j: int) -> float:
    z = amplitudes_of(state)
    k = check_site(j, z.size)
    u = z[k].real ** 2 + z[k].imag ** 2
    return float(u / (1.0 + u))


def sz_symbol(state, j: int) -> float:
    z = amplitudes_of(state)
    k = check_site(j, z.size)
    return float(_sz(z[k : k + 1])[0])
