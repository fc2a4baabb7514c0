"""Triangulations with median-dual areas and scaled inward normals.

A :class:`Mesh` is an immutable bundle of arrays.  Per-triangle data is
stored with shape (M, 3, ...) so the distribution schemes can run batched
over all elements.  Node ordering inside each triangle is counter-clockwise;
``normals[t, i]`` is the inward normal of the edge opposite local node i,
scaled by that edge's length.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateElement, InvalidTopology

__all__ = [
    "Mesh",
    "compute_normals",
    "triangle_areas",
    "build_dual",
    "load_mesh",
    "save_mesh",
]

# Triangles thinner than this (area relative to squared edge scale) are
# rejected as degenerate.
_DEGENERATE_RTOL = 1e-14


def compute_normals(coords):
    """Scaled inward edge normals of one triangle or a batch.

    ``coords`` has shape (..., 3, 2) with counter-clockwise node order.
    Returns (..., 3, 2); row i is the inward normal of the edge opposite
    node i, with length equal to that edge's length.  The three rows sum
    to zero.
    """
    coords = np.asarray(coords, dtype=float)
    x = coords[..., 0]
    y = coords[..., 1]
    n = np.empty_like(coords)
    n[..., 0, 0] = y[..., 1] - y[..., 2]
    n[..., 0, 1] = x[..., 2] - x[..., 1]
    n[..., 1, 0] = y[..., 2] - y[..., 0]
    n[..., 1, 1] = x[..., 0] - x[..., 2]
    n[..., 2, 0] = y[..., 0] - y[..., 1]
    n[..., 2, 1] = x[..., 1] - x[..., 0]
    area2 = (x[..., 1] - x[..., 0]) * (y[..., 2] - y[..., 0]) - (
        x[..., 2] - x[..., 0]
    ) * (y[..., 1] - y[..., 0])
    scale = np.square(n).sum(axis=(-1, -2))
    if np.any(area2 <= _DEGENERATE_RTOL * scale):
        raise DegenerateElement("zero-area or inverted triangle")
    return n


def triangle_areas(coords):
    """Signed areas of (..., 3, 2) coordinate triples (positive when CCW)."""
    coords = np.asarray(coords, dtype=float)
    d1 = coords[..., 1, :] - coords[..., 0, :]
    d2 = coords[..., 2, :] - coords[..., 0, :]
    return 0.5 * (d1[..., 0] * d2[..., 1] - d1[..., 1] * d2[..., 0])


@dataclass(frozen=True, eq=False)
class Mesh:
    """Immutable triangulation with precomputed geometry.

    Attributes
    ----------
    points : (N, 2) node coordinates
    tris : (M, 3) node ids, counter-clockwise
    normals : (M, 3, 2) scaled inward normals
    areas : (M,) triangle areas
    radii : (M,) sqrt of triangle areas
    dual_areas : (N,) median dual-cell areas
    bedges : (K, 2) boundary edges, interior on the left
    btags : length-K list of tag strings
    """

    points: np.ndarray
    tris: np.ndarray
    normals: np.ndarray
    areas: np.ndarray
    radii: np.ndarray
    dual_areas: np.ndarray
    bedges: np.ndarray
    btags: tuple
    reoriented: int = 0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def n_nodes(self):
        return self.points.shape[0]

    @property
    def n_tris(self):
        return self.tris.shape[0]

    @property
    def tags(self):
        return sorted(set(self.btags))

    def boundary_nodes(self, tag=None):
        """Sorted node ids lying on boundary edges (optionally one tag)."""
        key = ("bnodes", tag)
        if key not in self._cache:
            if tag is None:
                edges = self.bedges
            else:
                mask = np.array([t == tag for t in self.btags], dtype=bool)
                edges = self.bedges[mask]
            self._cache[key] = np.unique(edges)
        return self._cache[key]

    def boundary_edges(self, tag):
        mask = np.array([t == tag for t in self.btags], dtype=bool)
        return self.bedges[mask]

    def outward_normals(self, tag):
        """Unit outward normal per boundary node of ``tag``.

        Returns (node_ids, normals) where each node's normal is the
        normalized average of its incident tagged-edge outward normals.
        """
        key = ("onrm", tag)
        if key not in self._cache:
            edges = self.boundary_edges(tag)
            if edges.shape[0] == 0:
                raise InvalidTopology(f"no boundary edges tagged {tag!r}")
            d = self.points[edges[:, 1]] - self.points[edges[:, 0]]
            # Interior on the left of (a, b) => outward normal is (dy, -dx).
            en = np.stack([d[:, 1], -d[:, 0]], axis=1)
            nodes = self.boundary_nodes(tag)
            acc = np.zeros((nodes.shape[0], 2))
            pos = {n: k for k, n in enumerate(nodes)}
            for (a, b), nrm in zip(edges, en):
                acc[pos[a]] += nrm
                acc[pos[b]] += nrm
            length = np.hypot(acc[:, 0], acc[:, 1])
            if np.any(length <= 0.0):
                raise InvalidTopology(f"cancelling edge normals on tag {tag!r}")
            self._cache[key] = (nodes, acc / length[:, None])
        return self._cache[key]

    def tri_coords(self):
        """(M, 3, 2) coordinates of triangle nodes."""
        if "tcoords" not in self._cache:
            arr = self.points[self.tris]
            arr.setflags(write=False)
            self._cache["tcoords"] = arr
        return self._cache["tcoords"]

    def with_points(self, points):
        """Rebuild the mesh on moved nodes (same connectivity and tags)."""
        tagged = [(int(a), int(b), t) for (a, b), t in zip(self.bedges, self.btags)]
        return Mesh.from_arrays(points, self.tris, tagged)

    @staticmethod
    def from_arrays(points, tris, tagged_edges):
        """Validate raw arrays and build a Mesh.

        ``tagged_edges`` is an iterable of (i, j, tag).  Every boundary edge
        of the triangulation must receive exactly one tag; orientation of
        the pairs is normalized automatically.
        """
        points = np.array(points, dtype=float)
        tris = np.array(tris, dtype=np.int64)
        if points.ndim != 2 or points.shape[1] != 2:
            raise InvalidTopology(f"points must be (N, 2), got {points.shape}")
        if tris.ndim != 2 or tris.shape[1] != 3:
            raise InvalidTopology(f"tris must be (M, 3), got {tris.shape}")
        if not np.isfinite(points).all():
            raise InvalidTopology("non-finite node coordinates")
        n = points.shape[0]
        if tris.size and (tris.min() < 0 or tris.max() >= n):
            raise InvalidTopology("triangle references node id out of range")
        if any(len(set(t)) != 3 for t in tris.tolist()):
            raise InvalidTopology("triangle with repeated node ids")

        used = np.zeros(n, dtype=bool)
        used[tris.ravel()] = True
        if not used.all():
            missing = np.flatnonzero(~used)[:5].tolist()
            raise InvalidTopology(f"dangling nodes not in any triangle: {missing}")

        # Normalize orientation to CCW.
        coords = points[tris]
        signed = triangle_areas(coords)
        flipped = signed < 0.0
        reoriented = int(flipped.sum())
        if reoriented:
            tris[flipped] = tris[flipped][:, ::-1]
            warnings.warn(f"reoriented {reoriented} clockwise triangle(s)")
            coords = points[tris]
            signed = triangle_areas(coords)
        edge_scale = np.square(coords - np.roll(coords, 1, axis=1)).sum(axis=(1, 2))
        if np.any(signed <= _DEGENERATE_RTOL * edge_scale):
            bad = int(np.argmin(signed / np.maximum(edge_scale, 1e-300)))
            raise DegenerateElement(f"triangle {bad} has zero area")

        normals = compute_normals(coords)
        areas = signed
        dual = build_dual(tris, areas, n)

        # Conformity + boundary extraction: each undirected edge belongs to
        # one (boundary) or two (interior) triangles.
        edge_count = {}
        edge_dir = {}
        for t, (a, b, c) in enumerate(tris.tolist()):
            for u, v in ((a, b), (b, c), (c, a)):
                key = (u, v) if u < v else (v, u)
                edge_count[key] = edge_count.get(key, 0) + 1
                if edge_count[key] > 2:
                    raise InvalidTopology(f"edge {key} shared by >2 triangles")
                edge_dir[key] = (u, v)
        boundary = {k: edge_dir[k] for k, cnt in edge_count.items() if cnt == 1}

        tag_map = {}
        for i, j, tag in tagged_edges:
            key = (i, j) if i < j else (j, i)
            if key not in boundary:
                raise InvalidTopology(f"tagged edge {(i, j)} is not a boundary edge")
            if key in tag_map:
                raise InvalidTopology(f"boundary edge {(i, j)} tagged twice")
            tag_map[key] = str(tag)
        untagged = sorted(set(boundary) - set(tag_map))
        if untagged:
            raise InvalidTopology(
                f"{len(untagged)} boundary edge(s) without a tag, e.g. {untagged[:3]}"
            )

        keys = sorted(boundary)
        bedges = np.array([boundary[k] for k in keys], dtype=np.int64).reshape(-1, 2)
        btags = tuple(tag_map[k] for k in keys)

        for arr in (points, tris, normals, areas, dual, bedges):
            arr.setflags(write=False)
        radii = np.sqrt(areas)
        radii.setflags(write=False)
        return Mesh(
            points=points,
            tris=tris,
            normals=normals,
            areas=areas,
            radii=radii,
            dual_areas=dual,
            bedges=bedges,
            btags=btags,
            reoriented=reoriented,
        )


def build_dual(tris, areas, n_nodes):
    """Median dual-cell areas: |C_i| = sum of incident triangle areas / 3."""
    dual = np.zeros(n_nodes)
    np.add.at(dual, np.asarray(tris).ravel(), np.repeat(np.asarray(areas) / 3.0, 3))
    return dual


def load_mesh(path):
    """Read the native ASCII format (header ``rdmesh 1``)."""
    with open(path, "r", encoding="utf-8") as fh:
        raw = fh.readlines()

    tokens = []  # (lineno, [fields])
    for lineno, line in enumerate(raw, start=1):
        body = line.split("#", 1)[0].strip()
        if body:
            tokens.append((lineno, body.split()))

    def fail(lineno, msg):
        raise InvalidTopology(f"{path}:{lineno}: {msg}")

    cursor = 0

    def next_line(expect=None):
        nonlocal cursor
        if cursor >= len(tokens):
            raise InvalidTopology(f"{path}: unexpected end of file")
        lineno, fields = tokens[cursor]
        cursor += 1
        if expect is not None and fields[0] != expect:
            fail(lineno, f"expected {expect!r}, got {fields[0]!r}")
        return lineno, fields

    lineno, fields = next_line()
    if fields[:2] != ["rdmesh", "1"]:
        fail(lineno, "bad header, expected 'rdmesh 1'")

    lineno, fields = next_line("nodes")
    try:
        n = int(fields[1])
    except (IndexError, ValueError):
        fail(lineno, "bad node count")
    points = np.empty((n, 2))
    for k in range(n):
        lineno, fields = next_line()
        try:
            points[k] = (float(fields[0]), float(fields[1]))
        except (IndexError, ValueError):
            fail(lineno, f"bad node line {fields}")

    lineno, fields = next_line("triangles")
    try:
        m = int(fields[1])
    except (IndexError, ValueError):
        fail(lineno, "bad triangle count")
    tris = np.empty((m, 3), dtype=np.int64)
    for k in range(m):
        lineno, fields = next_line()
        try:
            tris[k] = (int(fields[0]), int(fields[1]), int(fields[2]))
        except (IndexError, ValueError):
            fail(lineno, f"bad triangle line {fields}")

    lineno, fields = next_line("boundary")
    try:
        kb = int(fields[1])
    except (IndexError, ValueError):
        fail(lineno, "bad boundary count")
    tagged = []
    for k in range(kb):
        lineno, fields = next_line()
        try:
            tagged.append((int(fields[0]), int(fields[1]), fields[2]))
        except (IndexError, ValueError):
            fail(lineno, f"bad boundary line {fields}")

    return Mesh.from_arrays(points, tris, tagged)


def save_mesh(mesh, path):
    """Write the native ASCII format with full-precision coordinates."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("rdmesh 1\n")
        fh.write(f"nodes {mesh.n_nodes}\n")
        for x, y in mesh.points:
            fh.write(f"{x:.17g} {y:.17g}\n")
        fh.write(f"triangles {mesh.n_tris}\n")
        for a, b, c in mesh.tris:
            fh.write(f"{a} {b} {c}\n")
        fh.write(f"boundary {mesh.bedges.shape[0]}\n")
        for (a, b), tag in zip(mesh.bedges, mesh.btags):
            fh.write(f"{a} {b} {tag}\n")
