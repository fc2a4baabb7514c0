"""Boundary conditions applied to nodal states after each update.

All conditions here are strong: the residual assembly never sees them;
after every pseudo-time step the affected nodal values are overwritten
(Dirichlet), projected (slip wall), or blended with the free stream
through one-dimensional characteristic relations along the outward
normal (far field).  Where tags meet at a node the wall projection runs
before the far-field blend, and pinned Dirichlet data always wins; the
application order over kinds is fixed and documented in ``KIND_ORDER``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidArgument, InvalidTopology, NonPhysicalState

__all__ = ["BoundarySet", "farfield_blend", "KIND_ORDER"]

KINDS = ("outflow", "slip_wall", "farfield", "dirichlet")
# Later kinds overwrite earlier ones at tag junctions.
KIND_ORDER = {kind: rank for rank, kind in enumerate(KINDS)}


def farfield_blend(law, q_interior, q_inf, normals_out):
    """Characteristic far-field state for each boundary node.

    ``normals_out`` are outward unit normals.  Classification by the
    interior normal Mach number: supersonic inflow is pinned to the free
    stream, supersonic outflow is left untouched, and subsonic faces mix
    the outgoing acoustic invariant of the interior with the incoming one
    of the free stream; entropy and tangential velocity follow the
    direction of the blended normal velocity.
    """
    g = law.gamma
    q_interior = np.asarray(q_interior, dtype=float)
    rho_i, u_i, v_i, p_i = law.primitives(q_interior)
    a_i = np.sqrt(g * p_i / rho_i)
    rho_f, u_f, v_f, p_f = law.primitives(np.asarray(q_inf, dtype=float))
    a_f = np.sqrt(g * p_f / rho_f)

    nx, ny = normals_out[..., 0], normals_out[..., 1]
    un_i = u_i * nx + v_i * ny
    un_f = u_f * nx + v_f * ny

    r_out = un_i + 2.0 * a_i / (g - 1.0)  # leaves the domain: interior data
    r_in = un_f - 2.0 * a_f / (g - 1.0)  # enters the domain: free stream
    un_b = 0.5 * (r_out + r_in)
    a_b = 0.25 * (g - 1.0) * (r_out - r_in)
    if np.any(a_b <= 0.0):
        raise NonPhysicalState("far-field blend produced a non-positive sound speed")

    outgoing = un_b > 0.0
    entropy = np.where(outgoing, p_i / rho_i**g, p_f / rho_f**g)
    ut_x = np.where(outgoing, u_i - un_i * nx, u_f - un_f * nx)
    ut_y = np.where(outgoing, v_i - un_i * ny, v_f - un_f * ny)

    rho_b = (a_b * a_b / (g * entropy)) ** (1.0 / (g - 1.0))
    p_b = rho_b * a_b * a_b / g
    q_b = law.conserved(rho_b, ut_x + un_b * nx, ut_y + un_b * ny, p_b)

    q_out = q_b
    q_out = np.where((un_i <= -a_i)[..., None], np.broadcast_to(q_inf, q_out.shape), q_out)
    q_out = np.where((un_i >= a_i)[..., None], q_interior, q_out)
    return q_out


@dataclass(frozen=True)
class _Binding:
    tag: str
    kind: str
    nodes: np.ndarray  # node ids (sorted)
    values: np.ndarray | None  # dirichlet data (n, m) or farfield free stream (m,)
    normals: np.ndarray | None  # outward unit normals per node


class BoundarySet:
    """Resolved boundary bindings for one mesh/law pair.

    ``bindings`` maps every boundary tag of the mesh to ``(kind, data)``:

    * ``("dirichlet", data)`` — data is a constant state, an array of
      nodal states, or a callable ``f(xy) -> states`` evaluated once at
      the tag's node coordinates;
    * ``("slip_wall", None)`` — Euler only; removes the wall-normal
      momentum component at each node;
    * ``("farfield", q_inf)`` — Euler only; characteristic blend with
      the given free-stream state;
    * ``("outflow", None)`` — no constraint.
    """

    def __init__(self, mesh, law, bindings):
        mesh_tags = set(mesh.tags)
        bound_tags = set(bindings)
        if mesh_tags != bound_tags:
            missing = sorted(mesh_tags - bound_tags)
            extra = sorted(bound_tags - mesh_tags)
            raise ConfigError(
                "boundary bindings must cover the mesh tags exactly; "
                f"missing {missing}, unknown {extra}"
            )
        self.law = law
        self._bindings: list[_Binding] = []
        for tag in sorted(bindings):
            kind, data = bindings[tag]
            if kind not in KINDS:
                raise ConfigError(f"unknown boundary kind {kind!r} for tag {tag!r}")
            nodes = mesh.boundary_nodes(tag)
            values = None
            normals = None
            if kind == "dirichlet":
                values = self._dirichlet_values(mesh, law, nodes, data)
            elif kind == "farfield":
                values = np.asarray(data, dtype=float)
                if values.shape != (law.m,):
                    raise ConfigError(
                        f"farfield data for tag {tag!r} must be one state of length {law.m}"
                    )
                nodes, normals = mesh.outward_normals(tag)
                self._check_normals(tag, normals)
            elif kind == "slip_wall":
                if law.m == 1:
                    raise ConfigError("slip_wall requires a system law")
                nodes, normals = mesh.outward_normals(tag)
                self._check_normals(tag, normals)
            self._bindings.append(_Binding(tag, kind, nodes, values, normals))
        self._bindings.sort(key=lambda b: KIND_ORDER[b.kind])

    @staticmethod
    def _check_normals(tag, normals):
        length = np.hypot(normals[:, 0], normals[:, 1])
        if np.any(length < 1e-12):
            raise InvalidTopology(
                f"boundary tag {tag!r} has a node with a zero-length outward normal"
            )

    @staticmethod
    def _dirichlet_values(mesh, law, nodes, data):
        xy = mesh.points[nodes]
        if callable(data):
            values = np.asarray(data(xy), dtype=float)
        else:
            values = np.asarray(data, dtype=float)
        if values.ndim == 0:
            values = np.full((len(nodes), law.m), float(values))
        elif values.shape == (law.m,):
            values = np.broadcast_to(values, (len(nodes), law.m)).copy()
        elif values.shape == (len(nodes),) and law.m == 1:
            values = values[:, None].copy()
        elif values.shape != (len(nodes), law.m):
            raise InvalidArgument(
                f"dirichlet data has shape {values.shape}, expected ({len(nodes)}, {law.m})"
            )
        return values

    def bindings(self):
        return list(self._bindings)

    def dirichlet_nodes(self):
        """Node ids whose states are pinned (used by time-step logic)."""
        ids = [b.nodes for b in self._bindings if b.kind == "dirichlet"]
        if not ids:
            return np.empty(0, dtype=int)
        return np.unique(np.concatenate(ids))

    def apply(self, q):
        """Impose all conditions on nodal states ``q`` (modified in place)."""
        for b in self._bindings:
            if b.kind == "outflow":
                continue
            if b.kind == "dirichlet":
                q[b.nodes] = b.values
            elif b.kind == "slip_wall":
                mom = q[b.nodes, 1:3]
                mn = (mom * b.normals).sum(axis=1)
                q[b.nodes, 1:3] = mom - mn[:, None] * b.normals
            elif b.kind == "farfield":
                q[b.nodes] = farfield_blend(self.law, q[b.nodes], b.values, b.normals)
        return q
