"""Randomized property checks."""
import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from cslattice import BosonLatticeState, GdstParams, SpinLatticeState, XxzParams, nearest_neighbor_ring
from cslattice import exact as ex
from cslattice import geometry as geo
from cslattice import observables as obs
from cslattice.dynamics import gdst_rhs, mdnls_rhs, xxz_spin_rhs
from cslattice.lattice import MdnlsParams

finite = st.floats(-3, 3, allow_nan=False)
cplx = st.builds(complex, finite, finite)


@given(st.lists(cplx, min_size=3, max_size=6), st.sampled_from(["no", "so"]), st.floats(0, 0.5))
def test_gdst_flow_is_tangent_to_norm_and_energy(b, ordering, gamma):
    # d/dt of conserved symbols vanishes pointwise along the vector field
    p = GdstParams(0.3, gamma, 3, nearest_neighbor_ring(len(b), 1.0), ordering)
    s = np.array(b)
    d = gdst_rhs(s, p)
    h = 1e-6
    for q in (obs.boson_norm, lambda y: obs.gdst_energy(y, p)):
        rate = (q(s + h * d) - q(s - h * d)) / (2 * h)
        scale = 1.0 + abs(q(s)) + float(np.linalg.norm(d)) ** 2
        assert abs(rate) < 1e-5 * scale


@given(st.lists(cplx, min_size=3, max_size=6), st.sampled_from(["no", "so"]))
def test_mdnls_flow_conserves_norm_pointwise(a, ordering):
    s = np.array(a)
    d = mdnls_rhs(s, MdnlsParams(1.0, 0.8, len(a), ordering))
    assert abs(np.sum((np.conj(s) * d).real)) < 1e-9 * (1 + np.sum(np.abs(s) ** 4))


@given(st.lists(cplx, min_size=3, max_size=6), st.floats(-2, 2), st.floats(-2, 2))
def test_xxz_flow_conserves_total_sz_pointwise(z, v, g):
    s = np.array(z)
    d = xxz_spin_rhs(s, XxzParams(v, g, len(z)))
    h = 1e-6
    rate = (obs.total_sz_symbol(s + h * d) - obs.total_sz_symbol(s - h * d)) / (2 * h)
    assert abs(rate) < 1e-6 * (1 + float(np.linalg.norm(d)) ** 2)


@given(st.lists(cplx, min_size=1, max_size=8))
def test_fermion_observables_bounded(z):
    s = SpinLatticeState(z)
    for j in range(1, len(z) + 1):
        assert 0.0 <= obs.fermion_number(s, j) < 1.0
        assert abs(obs.fermion_amplitude(s, j)) <= 0.5 + 1e-15


@given(cplx, st.integers(0, 60))
def test_poisson_sums_to_one_minus_tail(beta, n_max):
    d = obs.poisson_distribution(beta, n_max)
    assert abs(math.fsum(d.probs) + d.tail_mass - 1.0) < 1e-14
    assert np.all(d.probs >= 0)


@settings(max_examples=50)
@given(cplx, cplx, cplx)
def test_boson_ray_distance_triangle(a, b, c):
    def dist(x, y):
        return geo.ray_distance(min(1.0, abs(geo.boson_overlap(x, y))))
    assert dist(a, c) <= dist(a, b) + dist(b, c) + 1e-12


@settings(max_examples=50)
@given(cplx, cplx, st.sampled_from([0.5, 1.0, 1.5, 2.0]))
def test_su2_overlap_is_bounded_and_symmetric(z1, z2, j):
    o12, o21 = geo.su2_overlap(z1, z2, j), geo.su2_overlap(z2, z1, j)
    assert abs(o12) <= 1 + 1e-12
    assert abs(o12 - o21.conjugate()) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.floats(-2, 2), st.floats(-2, 2))
def test_coherent_state_minimum_uncertainty(x, y):
    beta = complex(x, y)
    basis = ex.enumerate_basis(1, ex.cutoff_for_tail(beta, 1e-13))
    psi, _ = ex.coherent_product_state(BosonLatticeState([beta]), basis, 1e-13)
    dx, dp = ex.quadrature_uncertainty(psi, 1)
    assert abs(dx * dp - 0.5) < 1e-6
