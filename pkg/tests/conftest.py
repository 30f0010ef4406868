"""Shared builders for the test suite."""

import numpy as np
import pytest

from tlsph.core import MaterialTable, NumericalParams, make_material
from tlsph.kernel import correction_matrices, find_immediate_neighbors, refresh_corrected_gradients
from tlsph.scenes import Rect, build_lattice


STEEL = dict(rho0=7850.0, E=200e9, nu=0.3, sigma_y=600e6)
ALUMINIUM = dict(rho0=2680.0, E=68.95e9, nu=0.33, sigma_y=277.8e6)


def lattice_system(nx=10, ny=10, dp=1e-3, material=None, body_id=0):
    """A rectangular lattice body with links and corrected gradients ready."""
    material = material or make_material(**STEEL)
    region = Rect(0.0, 0.0, nx * dp, ny * dp)
    particles = build_lattice(region, dp, material, body_id)
    particles.mat_id[:] = 0
    params = NumericalParams(dp=dp)
    links = find_immediate_neighbors(particles, params)
    table = MaterialTable([material])
    K = correction_matrices(particles, links)
    refresh_corrected_gradients(particles, links, K)
    particles.K_corr = K
    return particles, links, table, params, K


def interior_mask(particles, dp, margin=2):
    """Particles at least `margin` lattice layers away from the hull."""
    X = particles.X
    lo = X.min(axis=0) + (margin - 0.5) * dp
    hi = X.max(axis=0) - (margin - 0.5) * dp
    return np.all((X > lo) & (X < hi), axis=1)


@pytest.fixture
def steel():
    return make_material(**STEEL)


@pytest.fixture
def aluminium():
    return make_material(**ALUMINIUM)
