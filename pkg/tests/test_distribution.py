"""Per-triangle residual splitting: totals, upwind schemes, wave bounds."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdflux import distribution as dist
from rdflux import physics
from rdflux.errors import InvalidArgument
from rdflux.mesh import compute_normals, triangle_areas

from .conftest import REF_TRI, random_euler_states, random_triangles

GAUSS_4PT = (
    # 4-point Gauss-Legendre rule on [0, 1]: (position, weight).
    (0.5 - math.sqrt(525 + 70 * math.sqrt(30.0)) / 70.0, (18 - math.sqrt(30.0)) / 72.0),
    (0.5 - math.sqrt(525 - 70 * math.sqrt(30.0)) / 70.0, (18 + math.sqrt(30.0)) / 72.0),
    (0.5 + math.sqrt(525 - 70 * math.sqrt(30.0)) / 70.0, (18 + math.sqrt(30.0)) / 72.0),
    (0.5 + math.sqrt(525 + 70 * math.sqrt(30.0)) / 70.0, (18 - math.sqrt(30.0)) / 72.0),
)


def quadrature_contour_residual(law, coords, q_nodes):
    """Contour integral of the P1-interpolated flux, 4 Gauss points per edge.

    Independent check of the conservative-linearization identity: exact
    for flux components that are polynomial of degree <= 7 along each
    edge (the parameter-vector interpolant makes Euler fluxes quadratic).
    """
    total = np.zeros(law.m)
    z_nodes = law.to_params(q_nodes)
    for a, b in ((0, 1), (1, 2), (2, 0)):
        xa, xb = coords[a], coords[b]
        edge = xb - xa
        # Outward normal of a CCW-ordered edge, scaled by edge length.
        n_out = np.array([edge[1], -edge[0]])
        for t, w in GAUSS_4PT:
            z = (1.0 - t) * z_nodes[a] + t * z_nodes[b]
            fx, fy = law.flux(law.from_params(z[None]))
            total += w * (n_out[0] * fx[0] + n_out[1] * fy[0])
    return total


class TestTotals:
    def test_uniform_state_zero(self, euler, ref_normals):
        q = np.tile(euler.freestream(2.0, 5.0), (1, 3, 1))
        tot = dist.total_residual_rsd(euler, ref_normals[None], q)
        assert np.abs(tot).max() < 1e-13

    def test_rsd_total_matches_quadrature(self, euler, rng):
        coords = random_triangles(rng, 50)
        normals = compute_normals(coords)
        q = random_euler_states(rng, (50, 3))
        tot = dist.total_residual_rsd(euler, normals, q)
        for t in range(50):
            ref = quadrature_contour_residual(euler, coords[t], q[t])
            scale = max(np.abs(ref).max(), 1e-30)
            assert np.abs(tot[t] - ref).max() <= 1e-10 * max(scale, 1.0)

    def test_two_point_total_advection(self, ref_normals):
        law = physics.Advection((1.0, 0.0))
        q = np.array([[[1.0], [2.0], [3.0]]])
        tot = dist.total_residual_linear(law, ref_normals[None], q)
        # Midpoint rule on edges: sum_i (n_i . u) Q_i / 2 = (-0.5 + 1.0 + 0) = 0.5.
        assert np.isclose(tot[0, 0], 0.5, rtol=1e-14)


class TestNSchemeScalar:
    def test_one_target(self, ref_normals):
        law = physics.Advection((1.0, 0.0))
        q = np.array([[[1.0], [2.0], [3.0]]])
        r = dist.n_scheme_scalar(law, ref_normals[None], q)
        assert np.allclose(r.parts[0, :, 0], [0.0, 0.5, 0.0], atol=1e-14)
        assert np.isclose(r.star[0, 0], 1.0)

    def test_two_target(self, ref_normals):
        law = physics.Advection((1.0, 1.0))
        q = np.array([[[1.0], [2.0], [3.0]]])
        r = dist.n_scheme_scalar(law, ref_normals[None], q)
        assert np.allclose(r.parts[0, :, 0], [0.0, 0.5, 1.0], atol=1e-14)
        assert np.isclose(r.star[0, 0], 1.0)

    def test_conservation_random(self, rng):
        coords = random_triangles(rng, 200)
        normals = compute_normals(coords)
        q = rng.standard_normal((200, 3, 1)) * 2.0
        law = physics.Advection((0.8, 0.3))
        r = dist.n_scheme_scalar(law, normals, q)
        tot = dist.total_residual_linear(law, normals, q)
        assert np.abs(r.total - tot).max() < 1e-13

    def test_zero_velocity_zero_parts(self, ref_normals):
        law = physics.Advection((0.0, 0.0))
        q = np.array([[[1.0], [2.0], [3.0]]])
        r = dist.n_scheme_scalar(law, ref_normals[None], q)
        assert (r.parts == 0.0).all()

    def test_parts_upwind_sign_structure(self, rng):
        # Each part is [k_i]+ (Q_i - Q_star): zero for strictly upstream nodes.
        coords = random_triangles(rng, 100)
        normals = compute_normals(coords)
        q = rng.standard_normal((100, 3, 1))
        law = physics.Advection((1.0, 0.4))
        k = 0.5 * (normals * np.array([1.0, 0.4])).sum(axis=-1)
        r = dist.n_scheme_scalar(law, normals, q)
        assert (np.abs(r.parts[..., 0][k <= 0.0]) < 1e-14).all()


class TestNSchemeSystem:
    def test_uniform_zero(self, euler, ref_normals):
        q = np.tile(euler.freestream(0.9, 0.0), (1, 3, 1))
        r = dist.n_scheme_system(euler, ref_normals[None], q)
        assert np.abs(r.parts).max() < 1e-12

    def test_conservation_matches_rsd_total(self, euler, rng):
        coords = random_triangles(rng, 150)
        normals = compute_normals(coords)
        q = random_euler_states(rng, (150, 3))
        r = dist.n_scheme_system(euler, normals, q)
        tot = dist.total_residual_rsd(euler, normals, q)
        scale = np.abs(tot).max()
        assert np.abs(r.total - tot).max() <= 1e-11 * max(scale, 1.0)

    def test_m1_reduces_to_scalar(self, rng):
        law = physics.Burgers()
        coords = random_triangles(rng, 60)
        normals = compute_normals(coords)
        q = rng.standard_normal((60, 3, 1)) * 1.5
        sys_r = dist.n_scheme_system(law, normals, q)
        sca_r = dist.n_scheme_scalar(law, normals, q)
        assert np.allclose(sys_r.parts, sca_r.parts, atol=1e-13)


class TestRxnQstar:
    def test_uniform(self, euler, ref_normals):
        q = np.tile(euler.freestream(1.2, 0.0), (1, 3, 1))
        star = dist.rxn_qstar(euler, ref_normals[None], q, np.array([3.0]))
        assert np.allclose(star[0], q[0, 0], rtol=1e-13)

    def test_reference_value(self, ref_normals):
        law = physics.Advection((1.0, 0.0))
        q = np.array([[[1.0], [2.0], [3.0]]])
        star = dist.rxn_qstar(law, ref_normals[None], q, np.array([1.0]))
        assert np.isclose(star[0, 0], 3.0 - math.sqrt(2.0), rtol=1e-14)

    def test_linear_scaling(self, ref_normals, rng):
        law = physics.Advection((0.5, -0.2))
        q = rng.standard_normal((1, 3, 1))
        s = np.array([2.0])
        a = dist.rxn_qstar(law, ref_normals[None], q, s)
        b = dist.rxn_qstar(law, ref_normals[None], 3.0 * q, s)
        assert np.allclose(b, 3.0 * a, rtol=1e-13)


class TestRxnScheme:
    def test_reference_conservation(self, ref_normals):
        law = physics.Advection((1.0, 0.0))
        q = np.array([[[1.0], [2.0], [3.0]]])
        r = dist.rxn_scheme(law, ref_normals[None], q, s=np.array([1.0]))
        assert np.isclose(r.total[0, 0], 0.5, rtol=1e-13)

    def test_conservation_random_euler(self, euler, rng):
        coords = random_triangles(rng, 200)
        normals = compute_normals(coords)
        q = random_euler_states(rng, (200, 3))
        r = dist.rxn_scheme(euler, normals, q)
        tot = dist.total_residual_linear(euler, normals, q)
        scale = max(np.abs(tot).max(), 1.0)
        assert np.abs(r.total - tot).max() <= 1e-11 * scale

    def test_monotone_coefficient_positivity(self, rng):
        # Burgers: the wave-speed bound keeps both monotonicity
        # coefficients nonnegative - the node-to-star coupling
        # s ||n_i|| + n_i . f'((Q_i + Q*)/2) (secant form of the part) and
        # the star-state weight s ||n_j|| - n_j . f'(Q*).
        law = physics.Burgers()
        coords = random_triangles(rng, 300)
        normals = compute_normals(coords)
        q = rng.standard_normal((300, 3, 1)) * 2.0
        r = dist.rxn_scheme(law, normals, q)
        s = r.s[:, None]
        star = r.star[..., 0][:, None]
        nlen = np.hypot(normals[..., 0], normals[..., 1])
        nx = normals[..., 0]  # f' = (q, 0) for this Burgers convention
        p_coef = s * nlen + nx * 0.5 * (q[..., 0] + star)
        n_coef = s * nlen - nx * star
        assert (p_coef >= -1e-13).all()
        assert (n_coef >= -1e-13).all()

    def test_star_physicality_guard(self, euler, ref_normals):
        # A violently stretched state can push the closed-form star state
        # out of the physical region; the scheme must refuse, not clamp.
        q = np.stack(
            [
                euler.conserved(1e-6, 40.0, 0.0, 1e-8),
                euler.conserved(10.0, -40.0, 0.0, 1e-8),
                euler.conserved(1e-6, 0.0, 40.0, 1e-8),
            ]
        )[None]
        try:
            r = dist.rxn_scheme(euler, ref_normals[None], q)
        except Exception as exc:  # noqa: BLE001
            assert type(exc).__name__ == "NonPhysicalState"
        else:
            euler.check_physical(r.star)  # if it returned, star must be physical


class TestWaveSpeedBound:
    def test_dominates_nodal_speeds(self, euler, rng):
        q = random_euler_states(rng, (100, 3))
        s = dist.wave_speed_bound(euler, q, safety=1.1)
        assert (s >= 1.1 * euler.max_wavespeed(q).max(axis=1) - 1e-13).all()

    def test_safety_scales(self, euler, rng):
        q = random_euler_states(rng, (10, 3))
        a = dist.wave_speed_bound(euler, q, safety=1.0)
        b = dist.wave_speed_bound(euler, q, safety=2.0)
        assert np.allclose(b, 2.0 * a, rtol=1e-14)

    def test_velocity_field_override(self):
        law = physics.Advection((1.0, 0.0))
        q = np.zeros((1, 3, 1))
        vel = np.array([[[3.0, 4.0], [0.0, 0.0], [0.0, 0.0]]])
        s = dist.wave_speed_bound(law, q, velocity=vel, safety=1.0)
        assert np.isclose(s[0], 5.0)


class TestSplitEigenvalues:
    def test_exact_clip_when_delta_zero(self, rng):
        lam = rng.standard_normal((40, 4))
        plus, minus = dist.split_eigenvalues(lam, delta=0.0)
        assert np.allclose(plus, np.maximum(lam, 0.0))
        assert np.allclose(minus, np.minimum(lam, 0.0))

    def test_sum_and_signs_with_delta(self, rng):
        lam = rng.standard_normal((40, 4))
        plus, minus = dist.split_eigenvalues(lam, delta=0.3)
        assert np.allclose(plus + minus, lam, rtol=1e-13)
        assert (plus >= 0.0).all() and (minus <= 0.0).all()

    def test_smoothing_region_width(self):
        lam = np.array([[0.0]])
        plus, minus = dist.split_eigenvalues(lam, delta=0.5)
        # At lam = 0 the smoothed magnitude is delta/2, split evenly.
        assert np.isclose(plus[0, 0], 0.125)
        assert np.isclose(minus[0, 0], -0.125)


class TestRxn1D:
    def test_pure_advection_split(self):
        law = physics.Advection((1.0, 0.0))
        minus, plus = dist.rxn_scheme_1d(
            law, np.array([0.0]), np.array([2.0]), np.array([1.0])
        )
        assert np.isclose(minus[0], 0.0, atol=1e-15)
        assert np.isclose(plus[0], 2.0, rtol=1e-14)

    def test_conservation(self, rng):
        law = physics.Burgers()
        ql = rng.standard_normal((50, 1))
        qr = rng.standard_normal((50, 1))
        s = 1.0 + np.maximum(np.abs(ql), np.abs(qr))[:, 0]
        minus, plus = dist.rxn_scheme_1d(law, ql, qr, s)
        df = 0.5 * (qr**2 - ql**2)
        assert np.abs(minus + plus - df).max() < 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_conservation_property_all_schemes(seed):
    rng = np.random.default_rng(seed)
    coords = random_triangles(rng, 10)
    normals = compute_normals(coords)
    euler = physics.Euler()
    q = random_euler_states(rng, (10, 3))
    n_r = dist.n_scheme_system(euler, normals, q)
    tot_rsd = dist.total_residual_rsd(euler, normals, q)
    scale = max(np.abs(tot_rsd).max(), 1.0)
    assert np.abs(n_r.total - tot_rsd).max() <= 1e-11 * scale
    x_r = dist.rxn_scheme(euler, normals, q)
    tot_lin = dist.total_residual_linear(euler, normals, q)
    scale = max(np.abs(tot_lin).max(), 1.0)
    assert np.abs(x_r.total - tot_lin).max() <= 1e-11 * scale
