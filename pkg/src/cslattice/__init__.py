"""Quasiclassical coherent-state dynamics of quantized nonlinear lattices."""

from .errors import *  # noqa: F401,F403
from .lattice import (
    BosonLatticeState,
    CouplingMatrix,
    GdstParams,
    MdnlsParams,
    Ordering,
    SoCoefficients,
    SpinLatticeState,
    XxzParams,
    nearest_neighbor_ring,
    single_site_excitation,
    so_coefficients,
)
from .dynamics import (
    IntegratorConfig,
    Trajectory,
    gdst_rhs,
    integrate,
    mdnls_gauge_transform,
    mdnls_rhs,
    xxz_spin_rhs,
)

__version__ = "0.1.0"
