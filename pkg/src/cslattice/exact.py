"""Exact propagation of small GDST lattices in a truncated Fock basis.

Used to measure how far the true quantum state drifts from the factorized
coherent-state product followed by the quasiclassical equations.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import CutoffError, InvalidParameterError, ShapeError
from .lattice import GdstParams, Ordering, amplitudes_of, check_site, so_coefficients


def falling_factorial(n, k: int):
    """n (n-1) ... (n-k+1); works elementwise on integer arrays."""
    out = np.ones_like(np.asarray(n), dtype=float)
    for i in range(k):
        out = out * (np.asarray(n) - i)
    return out


@dataclass(frozen=True, eq=False)
class FockBasis:
    """Occupation tuples (n_1, ..., n_f) with every n_j <= n_max, in lexicographic order.

    With ``sector`` set, only tuples whose occupations sum to ``sector`` are kept.
    """

    f: int
    n_max: int
    sector: int | None = None
    occupations: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if int(self.f) != self.f or self.f < 1:
            raise InvalidParameterError(f"f must be a positive integer (got {self.f!r})")
        if int(self.n_max) != self.n_max or self.n_max < 0:
            raise InvalidParameterError(f"n_max must be a non-negative integer (got {self.n_max!r})")
        if self.sector is not None and not 0 <= self.sector <= self.f * self.n_max:
            raise InvalidParameterError(
                f"sector {self.sector} is empty for f={self.f}, n_max={self.n_max}"
            )
        states = itertools.product(range(self.n_max + 1), repeat=self.f)
        if self.sector is not None:
            states = (s for s in states if sum(s) == self.sector)
        occ = np.array(list(states), dtype=np.int64).reshape(-1, self.f)
        occ.setflags(write=False)
        object.__setattr__(self, "occupations", occ)

    def __len__(self):
        return self.occupations.shape[0]

    @property
    def dim(self) -> int:
        return len(self)

    @property
    def states(self) -> list:
        return [tuple(int(n) for n in row) for row in self.occupations]

    @cached_property
    def index(self) -> dict:
        return {tuple(row): i for i, row in enumerate(self.occupations.tolist())}

    @cached_property
    def totals(self) -> np.ndarray:
        return self.occupations.sum(axis=1)

    def lowering_map(self, k: int) -> np.ndarray:
        """For each basis index, the index of the state with n_k lowered by one (-1 if absent)."""
        out = np.full(self.dim, -1, dtype=np.int64)
        for i, row in enumerate(self.occupations.tolist()):
            if row[k] > 0:
                row[k] -= 1
                out[i] = self.index.get(tuple(row), -1)
        return out


def enumerate_basis(f: int, n_max: int, sector: int | None = None) -> FockBasis:
    return FockBasis(f, n_max, sector)


@dataclass(frozen=True, eq=False)
class HamiltonianMatrix:
    matrix: np.ndarray
    basis: FockBasis
    params: GdstParams

    @cached_property
    def sector_eigensystems(self) -> list:
        """(indices, eigenvalues, eigenvectors) for every total-occupation block."""
        blocks = []
        totals = self.basis.totals
        for total in np.unique(totals):
            idx = np.flatnonzero(totals == total)
            evals, evecs = np.linalg.eigh(self.matrix[np.ix_(idx, idx)])
            blocks.append((idx, evals, evecs))
        return blocks


def build_gdst_hamiltonian(p: GdstParams, basis: FockBasis) -> HamiltonianMatrix:
    """Dense GDST Hamiltonian in the given Fock basis.

    Diagonal: omega0 n - (gamma/m) n!/(n-m)! per mode, and for symmetric
    ordering additionally -gamma sum_k mu_k n!/(n-k)!. Hopping b^dag_j b_k has
    matrix element -lam_jk sqrt((n_j + 1) n_k).
    """
    if basis.f != p.f:
        raise ShapeError(f"basis has {basis.f} modes but coupling is {p.f}x{p.f}")
    occ = basis.occupations
    diag = np.sum(p.omega0 * occ - (p.gamma / p.m) * falling_factorial(occ, p.m), axis=1)
    if p.ordering is Ordering.SO:
        for k, mu in enumerate(so_coefficients(p.m), start=1):
            diag = diag - p.gamma * mu * np.sum(falling_factorial(occ, k), axis=1)
    h = np.diag(diag.astype(float))
    lam = p.coupling.entries
    pairs = [(j, k, lam[j, k]) for j in range(p.f) for k in range(p.f) if j != k and lam[j, k] != 0.0]
    index = basis.index
    for s, row in enumerate(occ.tolist()):
        for j, k, l_jk in pairs:
            if row[k] == 0 or row[j] == basis.n_max:
                continue
            target = list(row)
            target[j] += 1
            target[k] -= 1
            t = index.get(tuple(target))
            if t is not None:
                h[t, s] += -l_jk * math.sqrt((row[j] + 1) * row[k])
    return HamiltonianMatrix(h, basis, p)


@dataclass(frozen=True, eq=False)
class QuantumState:
    amplitudes: np.ndarray
    basis: FockBasis

    def __post_init__(self):
        if self.amplitudes.shape != (self.basis.dim,):
            raise ShapeError("state vector does not match the basis dimension")

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    @property
    def norm_defect(self) -> float:
        return abs(1.0 - self.norm)

    def normalized(self) -> "QuantumState":
        return QuantumState(self.amplitudes / self.norm, self.basis)


def _mode_coefficients(beta: complex, n_max: int) -> np.ndarray:
    c = np.empty(n_max + 1, dtype=complex)
    c[0] = math.exp(-0.5 * abs(beta) ** 2)
    for n in range(n_max):
        c[n + 1] = c[n] * beta / math.sqrt(n + 1)
    return c


def coherent_product_state(beta, basis: FockBasis, tail_bound: float = 1e-10):
    """Product of single-mode coherent states, truncated to ``basis`` and renormalized.

    Returns ``(state, tail_mass)`` where ``tail_mass`` is the probability lost
    to the cutoff before renormalization.
    """
    if basis.sector is not None:
        raise InvalidParameterError("coherent product states need an unrestricted basis")
    b = amplitudes_of(beta)
    if b.size != basis.f:
        raise ShapeError(f"{b.size} amplitudes for a {basis.f}-mode basis")
    amps = np.ones(basis.dim, dtype=complex)
    for j in range(basis.f):
        amps *= _mode_coefficients(complex(b[j]), basis.n_max)[basis.occupations[:, j]]
    kept = math.fsum(np.abs(amps) ** 2)
    tail = max(0.0, 1.0 - kept)
    if tail > tail_bound:
        raise CutoffError(f"cutoff n_max={basis.n_max} loses {tail:.3e} of the coherent state", tail)
    return QuantumState(amps / math.sqrt(kept), basis), tail


def evolve(h: HamiltonianMatrix, psi0: QuantumState, t: float) -> QuantumState:
    """exp(-i H t) psi0, block by block over total-occupation sectors."""
    if psi0.amplitudes.size != h.basis.dim:
        raise ShapeError("state and Hamiltonian live in different bases")
    out = np.zeros_like(psi0.amplitudes)
    for idx, evals, evecs in h.sector_eigensystems:
        coeff = evecs.T @ psi0.amplitudes[idx]
        out[idx] = evecs @ (np.exp(-1j * evals * t) * coeff)
    return QuantumState(out, h.basis)


def correlation_index(psi: QuantumState, beta_ref, basis: FockBasis | None = None) -> float:
    """2 - 2 |<psi | beta_ref>|, with the reference built in the same truncated basis."""
    basis = basis or psi.basis
    ref, _ = coherent_product_state(beta_ref, basis, tail_bound=math.inf)
    eps = 2.0 - 2.0 * abs(np.vdot(ref.amplitudes, psi.amplitudes))
    return float(min(max(eps, 0.0), 2.0))


def mode_occupation(psi: QuantumState, j: int) -> float:
    k = check_site(j, psi.basis.f)
    return float(np.sum(np.abs(psi.amplitudes) ** 2 * psi.basis.occupations[:, k]))


def _lowering_expectation(psi: QuantumState, k: int, power: int) -> complex:
    """<psi| b_k^power |psi>."""
    lower = psi.basis.lowering_map(k)
    target = np.arange(psi.basis.dim)
    for _ in range(power):
        target = np.where(target >= 0, lower[np.maximum(target, 0)], -1)
    ok = target >= 0
    weight = np.sqrt(falling_factorial(psi.basis.occupations[ok, k], power))
    c = psi.amplitudes
    return complex(np.sum(np.conj(c[target[ok]]) * weight * c[ok]))


def quadrature_uncertainty(psi: QuantumState, j: int) -> tuple:
    """(dx, dp) for x = (b^dag + b)/sqrt2, p = i(b^dag - b)/sqrt2 on mode j.

    Second moments use [b, b^dag] = 1 exactly instead of the truncated matrices.
    """
    k = check_site(j, psi.basis.f)
    b1 = _lowering_expectation(psi, k, 1)
    b2 = _lowering_expectation(psi, k, 2)
    n = mode_occupation(psi, j)
    x_mean = math.sqrt(2.0) * b1.real
    p_mean = math.sqrt(2.0) * b1.imag
    x2 = (2.0 * b2.real + 2.0 * n + 1.0) / 2.0
    p2 = (2.0 * n + 1.0 - 2.0 * b2.real) / 2.0
    return math.sqrt(max(x2 - x_mean**2, 0.0)), math.sqrt(max(p2 - p_mean**2, 0.0))


def cutoff_for_tail(beta, tail_bound: float = 1e-10, n_cap: int = 200) -> int:
    """Smallest per-mode cutoff whose coherent-product tail mass is below ``tail_bound``.

    ``beta`` may be a single amplitude or a sequence; the largest |beta|^2 sets the cutoff,
    since each mode's kept mass must exceed (1 - tail_bound)^(1/f).
    """
    b = np.atleast_1d(amplitudes_of(beta))
    mean = float(np.max(np.abs(b) ** 2))
    per_mode = tail_bound / b.size
    p = math.exp(-mean)
    cum = p
    for n in range(n_cap + 1):
        if 1.0 - cum < per_mode:
            return n
        p *= mean / (n + 1)
        cum += p
    raise CutoffError(f"no cutoff up to {n_cap} reaches tail {tail_bound:g}", 1.0 - cum)
