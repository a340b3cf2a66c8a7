import math

import numpy as np
import pytest

from cslattice import (
    BosonLatticeState,
    CouplingMatrix,
    GdstParams,
    IntegratorConfig,
    MdnlsParams,
    SpinLatticeState,
    XxzParams,
    gdst_rhs,
    integrate,
    nearest_neighbor_ring,
    single_site_excitation,
)
from cslattice import observables as obs
from cslattice.errors import BracketingError, InvalidParameterError, ShapeError

SINGLE = CouplingMatrix(np.zeros((1, 1)))


# -- symbols -----------------------------------------------------------------

def test_boson_norm():
    assert obs.boson_norm(BosonLatticeState([0, 0])) == 0
    assert obs.boson_norm(BosonLatticeState([math.sqrt(10), 0])) == pytest.approx(10)
    assert obs.boson_norm(BosonLatticeState([1, 1j])) == pytest.approx(2)


def test_gdst_energy_examples():
    assert obs.gdst_energy(BosonLatticeState([0, 0]), GdstParams(1, 1, 3, nearest_neighbor_ring(2, 1))) == 0
    assert obs.gdst_energy(BosonLatticeState([1.0]), GdstParams(1.0, 2.0, 2, SINGLE)) == pytest.approx(0.0)
    e = obs.gdst_energy(BosonLatticeState([1.0]), GdstParams(0.0, 1.0, 3, SINGLE, "so"))
    assert e == pytest.approx(-10 / 3)


def test_gdst_energy_hopping_term():
    # -sum_{k != l} lam b_k conj(b_l) = -2 Re(b_1 conj(b_2)) for the dimer
    p = GdstParams(0.0, 0.0, 3, nearest_neighbor_ring(2, 1.0))
    assert obs.gdst_energy(BosonLatticeState([1.0, 2.0]), p) == pytest.approx(-4.0)


def test_gdst_energy_shape_error():
    with pytest.raises(ShapeError):
        obs.gdst_energy(BosonLatticeState([1.0]), GdstParams(0, 0, 2, nearest_neighbor_ring(2, 1)))


def test_mdnls_energy_examples():
    assert obs.mdnls_energy(BosonLatticeState(np.zeros(3)), MdnlsParams(1, 1, 3)) == 0
    assert obs.mdnls_energy(BosonLatticeState(np.ones(3)), MdnlsParams(1.0, 0.0, 3)) == pytest.approx(6.0)
    e = obs.mdnls_energy(BosonLatticeState(np.ones(3)), MdnlsParams(0.0, 1.0, 3, "so"))
    assert e == pytest.approx(-10.5)


def test_xxz_energy_examples():
    p = XxzParams(1.3, 0.7, 4)
    assert obs.xxz_energy_symbol(SpinLatticeState(np.zeros(4)), p) == pytest.approx(1.3 * 4 / 4)
    assert obs.xxz_energy_symbol(SpinLatticeState(np.ones(4)), p) == pytest.approx(-0.7 * 4 / 2)
    rng = np.random.default_rng(0)
    z = rng.normal(size=4) + 1j * rng.normal(size=4)
    sz = np.array([obs.sz_symbol(SpinLatticeState(z), j) for j in range(1, 5)])
    e = obs.xxz_energy_symbol(SpinLatticeState(z), XxzParams(1.3, 0.0, 4))
    assert e == pytest.approx(1.3 * np.sum(sz * np.roll(sz, -1)))


def test_xxz_linear_term():
    p = XxzParams(1.0, 0.0, 3, include_linear_term=True, onsite_energy=0.5)
    # all spins down: V f/4 + (eps + V) * (-f/2)
    assert obs.xxz_energy_symbol(SpinLatticeState(np.zeros(3)), p) == pytest.approx(0.75 - 1.5 * 1.5)


def test_total_sz_examples():
    assert obs.total_sz_symbol(SpinLatticeState(np.zeros(5))) == pytest.approx(-2.5)
    assert obs.total_sz_symbol(SpinLatticeState(np.exp(1j * np.arange(4)))) == pytest.approx(0.0, abs=1e-15)
    assert obs.total_sz_symbol(SpinLatticeState([1e3, 0, 0])) == pytest.approx(0.5 - 1e-6 - 1.0, abs=1e-12)


# -- distributions -----------------------------------------------------------

def test_q_function_peak_and_unit_distance():
    beta = 1.2 - 0.4j
    grid = np.array([beta.real - 1.0, beta.real])
    q = obs.q_function(beta, grid, np.array([beta.imag]))
    assert q.values[0, 1] == pytest.approx(1 / math.pi, abs=1e-15)
    assert q.values[0, 0] == pytest.approx(math.exp(-1) / math.pi, rel=1e-14)


def test_q_function_default_grid_integral():
    q = obs.q_function(2.0 + 1.0j)
    assert q.integral() == pytest.approx(1.0, abs=1e-3)
    assert q.argmax() == pytest.approx((2.0, 1.0), abs=1e-9)


def test_q_function_rejects_irregular_grid():
    with pytest.raises(InvalidParameterError):
        obs.q_function(0.0, [0.0, 0.1, 0.3], [0.0])


def test_poisson_examples():
    d = obs.poisson_distribution(0.0, 5)
    assert d.probs[0] == 1.0 and not np.any(d.probs[1:]) and d.tail_mass == 0.0
    d = obs.poisson_distribution(math.sqrt(2), 10)
    assert d.probs[2] == pytest.approx(2 * math.exp(-2), rel=1e-14)


def test_poisson_mean_and_tail():
    d = obs.poisson_distribution(3.0, 60)
    assert math.fsum(d.probs) + d.tail_mass == pytest.approx(1.0, abs=1e-15)
    assert abs(d.mean() - 9.0) <= max(d.tail_mass * 60, 1e-12)


def test_poisson_rejects_bad_nmax():
    with pytest.raises(InvalidParameterError):
        obs.poisson_distribution(1.0, -1)


# -- self-trapping -----------------------------------------------------------

def test_gamma_cr_analytic():
    assert obs.gamma_cr_analytic(10, "no") == pytest.approx(0.04)
    assert obs.gamma_cr_analytic(10, "so") == pytest.approx(4 / 130)
    for n in (10, 100, 1000):
        assert obs.gamma_cr_analytic(n, "so") / obs.gamma_cr_analytic(n, "no") == pytest.approx(n / (n + 3))
    assert obs.gamma_cr_analytic(10, "no", lam=2.0) == pytest.approx(0.08)
    assert obs.gamma_cr_analytic(8, "so", m=2) == pytest.approx(0.5)
    with pytest.raises(InvalidParameterError):
        obs.gamma_cr_analytic(0, "no")


def test_population_imbalance():
    assert obs.population_imbalance(BosonLatticeState([math.sqrt(10), 0])) == pytest.approx(10)
    assert obs.population_imbalance(BosonLatticeState([1 + 1j, 1 - 1j])) == pytest.approx(0)
    assert obs.population_imbalance(BosonLatticeState([1, math.sqrt(3) * 1j])) == pytest.approx(-2)
    with pytest.raises(ShapeError):
        obs.population_imbalance(BosonLatticeState([1, 1, 1]))


def _dimer_trajectory(gamma, n_total=10.0, t_end=20 * math.pi):
    p = GdstParams(0.0, gamma, 3, nearest_neighbor_ring(2, 1.0))
    return integrate(gdst_rhs, single_site_excitation(2, 1, n_total), IntegratorConfig.uniform(t_end, 0.1), p)


@pytest.mark.parametrize("gamma, trapped", [(0.05, True), (0.03, False), (0.0, False)])
def test_is_self_trapped(gamma, trapped):
    assert obs.is_self_trapped(_dimer_trajectory(gamma), 1, 10.0) is trapped


def test_linear_ring_spreads():
    p = GdstParams(0.0, 0.0, 3, nearest_neighbor_ring(5, 1.0))
    traj = integrate(gdst_rhs, single_site_excitation(5, 3, 4.0), IntegratorConfig.uniform(30.0, 0.1), p)
    assert not obs.is_self_trapped(traj, 3, 4.0)


@pytest.mark.parametrize("n_total, ordering", [(10, "no"), (10, "so"), (2, "no")])
def test_gamma_cr_numeric_matches_closed_form(n_total, ordering):
    template = GdstParams(0.0, 0.0, 3, nearest_neighbor_ring(2, 1.0), ordering)
    numeric = obs.gamma_cr_numeric(template, n_total)
    assert numeric == pytest.approx(obs.gamma_cr_analytic(n_total, ordering), rel=0.02)


def test_gamma_cr_numeric_bad_bracket():
    template = GdstParams(0.0, 0.0, 3, nearest_neighbor_ring(2, 1.0))
    with pytest.raises(BracketingError):
        obs.gamma_cr_numeric(template, 10, bracket=(0.05, 0.1))


# -- fermion observables -----------------------------------------------------

def test_fermion_amplitude_examples():
    assert obs.fermion_amplitude(SpinLatticeState(np.zeros(3)), 2) == 0
    assert abs(obs.fermion_amplitude(SpinLatticeState([1.0, 0.3, 0]), 1)) == pytest.approx(0.5)
    assert obs.fermion_amplitude(SpinLatticeState([1j, 0.3 + 2j, 0]), 2) == pytest.approx(0, abs=1e-16)


def test_fermion_amplitude_string_sign():
    # site 1 spin-down (z=0) contributes string factor +1, |z|>1 flips the sign
    z = [0.0, 2.0, 1.0]
    assert obs.fermion_amplitude(SpinLatticeState(z), 3) == pytest.approx((1 - 4) / 5 * 0.5)


@pytest.mark.parametrize("z, n", [(0.0, 0.0), (1.0, 0.5), (3.0, 0.9), (3j, 0.9)])
def test_fermion_number(z, n):
    assert obs.fermion_number(SpinLatticeState([z, 0, 0]), 1) == pytest.approx(n)


def test_fermion_number_is_shifted_sz():
    rng = np.random.default_rng(5)
    s = SpinLatticeState(rng.normal(size=5) + 1j * rng.normal(size=5))
    for j in range(1, 6):
        assert obs.fermion_number(s, j) - 0.5 == pytest.approx(obs.sz_symbol(s, j), abs=1e-15)
