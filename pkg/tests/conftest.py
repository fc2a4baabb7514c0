"""Shared fixtures: reference geometry, laws, and random-state helpers."""

import numpy as np
import pytest

from rdflux import meshgen, physics
from rdflux.mesh import compute_normals, triangle_areas

# Right isoceles reference triangle: nodes (0,0), (1,0), (0,1), CCW.
REF_TRI = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])


@pytest.fixture
def ref_tri():
    return REF_TRI.copy()


@pytest.fixture
def ref_normals():
    return compute_normals(REF_TRI[None, :, :])[0]


@pytest.fixture
def euler():
    return physics.Euler()


@pytest.fixture
def burgers():
    return physics.Burgers()


@pytest.fixture
def advection():
    return physics.Advection((1.0, 0.0))


def random_triangles(rng, n, min_area=0.02):
    """CCW triangles with vertices in the unit square and non-tiny area."""
    out = []
    while len(out) < n:
        cand = rng.random((n, 3, 2))
        areas = triangle_areas(cand)
        flip = areas < 0.0
        cand[flip] = cand[flip][:, ::-1, :]
        keep = np.abs(areas) > min_area
        out.extend(cand[keep])
    return np.asarray(out[:n])


def random_euler_states(rng, shape, mach_scale=2.0):
    """Physical conserved states with moderate Mach numbers."""
    law = physics.Euler()
    rho = 0.3 + 2.0 * rng.random(shape)
    p = 0.3 + 2.0 * rng.random(shape)
    a = np.sqrt(law.gamma * p / rho)
    u = mach_scale * (rng.random(shape) - 0.5) * a
    v = mach_scale * (rng.random(shape) - 0.5) * a
    return law.conserved(rho, u, v, p)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


@pytest.fixture(scope="session")
def small_irregular_mesh():
    mesh = meshgen.generate_rect_mesh((0.0, 1.0, 0.0, 1.0), 10, 10)
    return meshgen.perturb_interior(mesh, 0.2, seed=3)
