"""Mesh structure: normals, dual areas, tags, file round-trips, generators."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rdflux import meshgen
from rdflux.errors import InvalidArgument, InvalidTopology
from rdflux.mesh import Mesh, compute_normals, load_mesh, save_mesh, triangle_areas

from .conftest import random_triangles


def _edge_lengths(coords):
    # Edge opposite node i connects the other two nodes.
    out = np.empty(coords.shape[:-1])
    for i in range(3):
        a = coords[..., (i + 1) % 3, :]
        b = coords[..., (i + 2) % 3, :]
        out[..., i] = np.hypot(*(a - b).T).T
    return out


class TestNormals:
    def test_reference_triangle_values(self, ref_tri):
        n = compute_normals(ref_tri[None])[0]
        # Inward scaled normals: opposite-edge length, pointing into the triangle.
        assert np.allclose(n[0], [-1.0, -1.0])  # opposite the hypotenuse
        assert np.allclose(n[1], [1.0, 0.0])
        assert np.allclose(n[2], [0.0, 1.0])

    def test_sum_zero_and_edge_lengths_random(self, rng):
        coords = random_triangles(rng, 300)
        n = compute_normals(coords)
        resid = np.abs(n.sum(axis=1)).max()
        scale = np.hypot(n[..., 0], n[..., 1]).max()
        assert resid <= 1e-13 * scale
        lens = np.hypot(n[..., 0], n[..., 1])
        assert np.allclose(lens, _edge_lengths(coords), rtol=1e-13, atol=0.0)

    def test_inward_orientation(self, rng):
        coords = random_triangles(rng, 50)
        n = compute_normals(coords)
        centroid = coords.mean(axis=1, keepdims=True)
        mid = 0.5 * (coords[:, [1, 2, 0], :] + coords[:, [2, 0, 1], :])
        # Normal attached to node i sits on the opposite edge and must
        # point from that edge toward the interior.
        toward = ((centroid - mid) * n).sum(axis=-1)
        assert (toward > 0.0).all()


class TestAreasAndDual:
    def test_positive_ccw(self, rng):
        coords = random_triangles(rng, 100)
        assert (triangle_areas(coords) > 0.0).all()

    def test_dual_partition(self, small_irregular_mesh):
        m = small_irregular_mesh
        assert np.isclose(m.dual_areas.sum(), m.areas.sum(), rtol=1e-12)
        assert (m.dual_areas > 0.0).all()

    def test_dual_is_third_of_incident_area(self, small_irregular_mesh):
        m = small_irregular_mesh
        acc = np.zeros(m.n_nodes)
        for t, tri in enumerate(m.tris):
            acc[tri] += m.areas[t] / 3.0
        assert np.allclose(acc, m.dual_areas, rtol=1e-13)


class TestMeshChecks:
    EDGES = [(0, 1, "b"), (1, 2, "b"), (2, 0, "b")]

    def test_clockwise_reoriented(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        tris = np.array([[0, 2, 1]])  # clockwise
        with pytest.warns(UserWarning, match="reoriented"):
            m = Mesh.from_arrays(pts, tris, self.EDGES)
        assert triangle_areas(m.tri_coords())[0] > 0.0
        assert m.reoriented == 1

    def test_degenerate_rejected(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
        with pytest.raises(Exception):
            Mesh.from_arrays(pts, np.array([[0, 1, 2]]), self.EDGES)

    def test_bad_index_rejected(self):
        pts = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        with pytest.raises(InvalidTopology):
            Mesh.from_arrays(pts, np.array([[0, 1, 7]]), self.EDGES)


class TestFileRoundTrip:
    def test_bit_exact(self, small_irregular_mesh, tmp_path):
        path = tmp_path / "m.mesh"
        save_mesh(small_irregular_mesh, path)
        again = load_mesh(path)
        assert (again.points == small_irregular_mesh.points).all()
        assert (again.tris == small_irregular_mesh.tris).all()
        assert sorted(again.tags) == sorted(small_irregular_mesh.tags)
        for t in again.tags:
            assert (
                again.boundary_edges(t) == small_irregular_mesh.boundary_edges(t)
            ).all()

    def test_missing_file_raises(self, tmp_path):
        with pytest.raises(OSError):
            load_mesh(tmp_path / "nope.mesh")


class TestRectGenerator:
    def test_counts(self):
        m = meshgen.generate_rect_mesh((0.0, 1.0, 0.0, 1.0), 1, 1)
        assert m.n_tris == 2 and m.n_nodes == 4
        k = 7
        m = meshgen.generate_rect_mesh((0.0, 1.0, 0.0, 1.0), k, k)
        assert m.n_tris == 2 * k * k and m.n_nodes == (k + 1) ** 2

    def test_total_area(self):
        m = meshgen.generate_rect_mesh((0.0, 2.0, -1.0, 1.0), 9, 5)
        assert np.isclose(m.areas.sum(), 4.0, rtol=1e-12)

    def test_boundary_tags(self):
        m = meshgen.generate_rect_mesh((0.0, 1.0, 0.0, 1.0), 4, 4)
        assert sorted(m.tags) == ["bottom", "left", "right", "top"]
        assert (m.points[m.boundary_nodes("bottom")][:, 1] == 0.0).all()
        assert (m.points[m.boundary_nodes("top")][:, 1] == 1.0).all()

    def test_perturb_keeps_boundary(self):
        m = meshgen.generate_rect_mesh((0.0, 1.0, 0.0, 1.0), 8, 8)
        p = meshgen.perturb_interior(m, 0.25, seed=1)
        b = m.boundary_nodes()
        assert (p.points[b] == m.points[b]).all()
        assert (triangle_areas(p.tri_coords()) > 0.0).all()

    def test_perturb_deterministic(self):
        m = meshgen.generate_rect_mesh((0.0, 1.0, 0.0, 1.0), 8, 8)
        a = meshgen.perturb_interior(m, 0.2, seed=5)
        b = meshgen.perturb_interior(m, 0.2, seed=5)
        assert (a.points == b.points).all()


class TestCylinderGenerator:
    def test_ring_counts(self):
        m = meshgen.generate_cylinder_mesh((0.0, 0.0), 1.0, ("radius", 2.0), 1, 4)
        assert m.n_tris == 8

    def test_wall_nodes_on_radius(self):
        m = meshgen.generate_cylinder_mesh((0.0, 0.0), 0.5, ("radius", 3.0), 6, 24)
        w = m.points[m.boundary_nodes("wall")]
        assert np.allclose(np.hypot(w[:, 0], w[:, 1]), 0.5, atol=1e-12)

    def test_annulus_area(self):
        m = meshgen.generate_cylinder_mesh((0.0, 0.0), 1.0, ("radius", 4.0), 32, 64)
        exact = np.pi * (16.0 - 1.0)
        assert abs(m.areas.sum() - exact) / exact < 0.02

    def test_rect_clip_area_and_tags(self):
        m = meshgen.generate_cylinder_mesh(
            (0.0, 0.0), 1.0, ("rect", (-2.0, 0.0, -3.0, 3.0)), 32, 96, grading=1.05
        )
        exact = 2.0 * 6.0 - np.pi * 0.5  # rectangle minus embedded half-disk
        assert abs(m.areas.sum() - exact) / exact < 0.02
        assert set(m.tags) == {"wall", "farfield", "exit"}
        ex = m.points[m.boundary_nodes("exit")]
        assert np.allclose(ex[:, 0], 0.0, atol=1e-12)

    def test_grading_bound(self):
        with pytest.raises(InvalidArgument):
            meshgen.generate_cylinder_mesh(
                (0.0, 0.0), 1.0, ("radius", 3.0), 8, 16, grading=1.5
            )


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_normals_sum_zero_property(seed):
    coords = random_triangles(np.random.default_rng(seed), 8)
    n = compute_normals(coords)
    scale = np.hypot(n[..., 0], n[..., 1]).max()
    assert np.abs(n.sum(axis=1)).max() <= 1e-13 * scale
