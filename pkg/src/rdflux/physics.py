"""Conservation laws: scalar advection, 2D Burgers, and 2D Euler.

Every law exposes the same small surface: flux pair (f, g), directional
Jacobian n.J, directional eigensystem, a sub-characteristic wave-speed
bound, and the parameter-vector machinery used by the conservative
linearization of the systems upwind scheme.  All methods accept batched
inputs (leading axes broadcast); states carry a trailing axis of length m.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NonPhysicalState

__all__ = [
    "ConservationLaw",
    "Advection",
    "RotatingAdvection",
    "Burgers",
    "Euler",
    "Eigensystem",
    "RsdAverage",
    "make_law",
]


@dataclass(frozen=True)
class Eigensystem:
    """Eigendecomposition of a directional Jacobian n.J = R diag(lam) L."""

    lam: np.ndarray  # (..., m) ascending
    right: np.ndarray  # (..., m, m) columns are right eigenvectors
    left: np.ndarray  # (..., m, m) rows are left eigenvectors


@dataclass(frozen=True)
class RsdAverage:
    """Conservative-linearization data for one triangle (or a batch).

    ``zhat`` is the parameter-vector average, ``qhat`` the corresponding
    conserved state, ``qhat_nodes`` the transformed nodal states
    (dq/dz)(zhat) . Z_i, and ``jx``/``jy`` the flux Jacobians at ``qhat``.
    """

    zhat: np.ndarray  # (..., m)
    qhat: np.ndarray  # (..., m)
    qhat_nodes: np.ndarray  # (..., 3, m)
    jx: np.ndarray  # (..., m, m)
    jy: np.ndarray  # (..., m, m)


class ConservationLaw:
    """Shared interface; subclasses fill in the analytic pieces."""

    m: int = 1
    name: str = "law"

    # -- flux and derivatives -------------------------------------------
    def flux(self, q):
        raise NotImplementedError

    def flux_jacobian(self, q, n):
        """Directional Jacobian n.J as (..., m, m)."""
        raise NotImplementedError

    def eigensystem(self, q, n):
        raise NotImplementedError

    def max_wavespeed(self, q):
        """Upper bound on ||(lam_x, lam_y)|| over the wave families."""
        raise NotImplementedError

    # -- parameter vector -----------------------------------------------
    # The identity parameterization works for every scalar law; Euler
    # overrides all four hooks.
    def to_params(self, q):
        return np.asarray(q, dtype=float)

    def from_params(self, z):
        return np.asarray(z, dtype=float)

    def dqdz(self, z):
        z = np.asarray(z, dtype=float)
        eye = np.eye(self.m)
        return np.broadcast_to(eye, z.shape[:-1] + (self.m, self.m)).copy()

    def rsd_average(self, q_nodes):
        """Average a (..., 3, m) nodal batch per the parameter-vector rule."""
        q_nodes = np.asarray(q_nodes, dtype=float)
        z_nodes = self.to_params(q_nodes)
        zhat = z_nodes.mean(axis=-2)
        qhat = self.from_params(zhat)
        dq = self.dqdz(zhat)
        qhat_nodes = z_nodes @ np.swapaxes(dq, -1, -2)
        jx = self.flux_jacobian(qhat, np.array([1.0, 0.0]))
        jy = self.flux_jacobian(qhat, np.array([0.0, 1.0]))
        return RsdAverage(zhat, qhat, qhat_nodes, jx, jy)

    def check_physical(self, q, where=""):
        """Hook for positivity checks; scalar laws accept everything."""


class Advection(ConservationLaw):
    """Linear advection with a constant velocity."""

    m = 1
    name = "advection"

    def __init__(self, velocity=(1.0, 0.0)):
        self.velocity = np.array(velocity, dtype=float)
        if self.velocity.shape != (2,):
            raise InvalidArgument("advection velocity must be a 2-vector")

    def velocity_at(self, xy):
        xy = np.asarray(xy, dtype=float)
        return np.broadcast_to(self.velocity, xy.shape).copy()

    def streamfunction(self, xy):
        # u = (psi_y, -psi_x) recovers the constant field.
        xy = np.asarray(xy, dtype=float)
        ux, uy = self.velocity
        return ux * xy[..., 1] - uy * xy[..., 0]

    def flux(self, q):
        q = np.asarray(q, dtype=float)
        return self.velocity[0] * q, self.velocity[1] * q

    def flux_jacobian(self, q, n):
        q = np.asarray(q, dtype=float)
        n = np.asarray(n, dtype=float)
        un = n[..., 0] * self.velocity[0] + n[..., 1] * self.velocity[1]
        shape = np.broadcast_shapes(q.shape[:-1], un.shape)
        return np.broadcast_to(un, shape).reshape(shape + (1, 1)).copy()

    def eigensystem(self, q, n):
        jac = self.flux_jacobian(q, n)
        lam = jac[..., 0]
        ones = np.ones_like(jac)
        return Eigensystem(lam, ones, ones.copy())

    def max_wavespeed(self, q):
        q = np.asarray(q, dtype=float)
        s = math.hypot(self.velocity[0], self.velocity[1])
        return np.full(q.shape[:-1], s)


class RotatingAdvection(ConservationLaw):
    """Advection by a divergence-free position-dependent velocity field.

    The field is given by a streamfunction psi with u = (psi_y, -psi_x).
    Per-triangle upwind parameters use nodal psi differences, which makes
    the assembled scheme conservative even though the analytic equation is
    in advective form.  Default field: solid-body rotation about the
    origin, psi = -omega (x^2 + y^2) / 2.
    """

    m = 1
    name = "rotating-advection"

    def __init__(self, omega=math.pi):
        self.omega = float(omega)

    def velocity_at(self, xy):
        xy = np.asarray(xy, dtype=float)
        out = np.empty_like(xy)
        out[..., 0] = -self.omega * xy[..., 1]
        out[..., 1] = self.omega * xy[..., 0]
        return out

    def streamfunction(self, xy):
        xy = np.asarray(xy, dtype=float)
        return -0.5 * self.omega * (xy[..., 0] ** 2 + xy[..., 1] ** 2)

    def flux(self, q):
        raise InvalidArgument(
            "position-dependent advection has no position-free flux; "
            "use velocity_at/streamfunction"
        )

    def flux_jacobian(self, q, n):
        raise InvalidArgument("position-dependent advection Jacobian needs xy")

    def max_wavespeed(self, q):
        raise InvalidArgument("use speed_at(xy) for position-dependent advection")

    def speed_at(self, xy):
        v = self.velocity_at(xy)
        return np.hypot(v[..., 0], v[..., 1])


class Burgers(ConservationLaw):
    """2D scalar Burgers flux f = (q^2/2, 0)."""

    m = 1
    name = "burgers"

    def flux(self, q):
        q = np.asarray(q, dtype=float)
        return 0.5 * q * q, np.zeros_like(q)

    def fprime(self, q):
        """Flux derivative vector (q, 0) as (..., 2)."""
        q = np.asarray(q, dtype=float)
        out = np.zeros(q.shape + (2,))
        out[..., 0] = q
        return out

    def flux_jacobian(self, q, n):
        q = np.asarray(q, dtype=float)
        n = np.asarray(n, dtype=float)
        un = q[..., 0] * n[..., 0]
        return un.reshape(un.shape + (1, 1)).copy()

    def eigensystem(self, q, n):
        jac = self.flux_jacobian(q, n)
        lam = jac[..., 0]
        ones = np.ones_like(jac)
        return Eigensystem(lam, ones, ones.copy())

    def max_wavespeed(self, q):
        q = np.asarray(q, dtype=float)
        return np.abs(q[..., 0]) if q.shape and q.shape[-1] == 1 else np.abs(q)


class Euler(ConservationLaw):
    """2D compressible Euler equations for a perfect gas."""

    m = 4
    name = "euler"

    def __init__(self, gamma=1.4):
        if gamma <= 1.0:
            raise InvalidArgument("gamma must exceed 1")
        self.gamma = float(gamma)

    # -- primitive access -------------------------------------------------
    def primitives(self, q, check=True):
        """(rho, u, v, p) from conserved variables."""
        q = np.asarray(q, dtype=float)
        rho = q[..., 0]
        if check and np.any(rho <= 0.0):
            raise NonPhysicalState("non-positive density")
        u = q[..., 1] / rho
        v = q[..., 2] / rho
        p = (self.gamma - 1.0) * (q[..., 3] - 0.5 * rho * (u * u + v * v))
        if check and np.any(p <= 0.0):
            raise NonPhysicalState("non-positive pressure")
        return rho, u, v, p

    def conserved(self, rho, u, v, p):
        rho, u, v, p = np.broadcast_arrays(
            *(np.asarray(a, dtype=float) for a in (rho, u, v, p))
        )
        q = np.empty(rho.shape + (4,))
        q[..., 0] = rho
        q[..., 1] = rho * u
        q[..., 2] = rho * v
        q[..., 3] = p / (self.gamma - 1.0) + 0.5 * rho * (u * u + v * v)
        return q

    def sound_speed(self, q):
        rho, _, _, p = self.primitives(q)
        return np.sqrt(self.gamma * p / rho)

    def check_physical(self, q, where=""):
        q = np.asarray(q, dtype=float)
        rho = q[..., 0]
        p = (self.gamma - 1.0) * (
            q[..., 3] - 0.5 * (q[..., 1] ** 2 + q[..., 2] ** 2) / np.where(rho > 0, rho, 1.0)
        )
        bad = (rho <= 0.0) | (p <= 0.0) | ~np.isfinite(rho) | ~np.isfinite(p)
        if np.any(bad):
            idx = np.argwhere(bad)
            head = idx[0].tolist()
            raise NonPhysicalState(
                f"non-physical state{' ' + where if where else ''} at index {head} "
                f"({int(bad.sum())} total)"
            )

    # -- flux and derivatives ---------------------------------------------
    def flux(self, q):
        rho, u, v, p = self.primitives(q)
        q = np.asarray(q, dtype=float)
        e = q[..., 3]
        f = np.empty_like(q)
        g = np.empty_like(q)
        f[..., 0] = rho * u
        f[..., 1] = rho * u * u + p
        f[..., 2] = rho * u * v
        f[..., 3] = u * (e + p)
        g[..., 0] = rho * v
        g[..., 1] = rho * u * v
        g[..., 2] = rho * v * v + p
        g[..., 3] = v * (e + p)
        return f, g

    def flux_jacobian(self, q, n):
        rho, u, v, p = self.primitives(q)
        n = np.asarray(n, dtype=float)
        g1 = self.gamma - 1.0
        k = 0.5 * (u * u + v * v)
        h = (np.asarray(q, dtype=float)[..., 3] + p) / rho
        nx, ny = n[..., 0], n[..., 1]
        un = u * nx + v * ny
        shape = np.broadcast_shapes(u.shape, nx.shape)
        jac = np.zeros(shape + (4, 4))
        u, v, k, h, un, nx, ny = np.broadcast_arrays(u, v, k, h, un, nx, ny)
        jac[..., 0, 1] = nx
        jac[..., 0, 2] = ny
        jac[..., 1, 0] = g1 * k * nx - u * un
        jac[..., 1, 1] = un + (2.0 - self.gamma) * u * nx
        jac[..., 1, 2] = u * ny - g1 * v * nx
        jac[..., 1, 3] = g1 * nx
        jac[..., 2, 0] = g1 * k * ny - v * un
        jac[..., 2, 1] = v * nx - g1 * u * ny
        jac[..., 2, 2] = un + (2.0 - self.gamma) * v * ny
        jac[..., 2, 3] = g1 * ny
        jac[..., 3, 0] = (g1 * k - h) * un
        jac[..., 3, 1] = h * nx - g1 * u * un
        jac[..., 3, 2] = h * ny - g1 * v * un
        jac[..., 3, 3] = self.gamma * un
        return jac

    def eigensystem_primitive(self, u, v, h, n):
        """Eigensystem of n.J from velocity and total enthalpy.

        Separated out so Roe-type averaged states (which have no density)
        can reuse it.  ``n`` need not be unit length; eigenvalues scale
        with it, eigenvectors use the normalized direction.
        """
        u, v, h = (np.asarray(a, dtype=float) for a in (u, v, h))
        n = np.asarray(n, dtype=float)
        g1 = self.gamma - 1.0
        k = 0.5 * (u * u + v * v)
        a2 = g1 * (h - k)
        if np.any(a2 <= 0.0):
            raise NonPhysicalState("non-positive squared sound speed")
        a = np.sqrt(a2)
        nlen = np.hypot(n[..., 0], n[..., 1])
        if np.any(nlen <= 0.0):
            raise InvalidArgument("zero direction vector")
        nx = n[..., 0] / nlen
        ny = n[..., 1] / nlen
        shape = np.broadcast_shapes(u.shape, nx.shape)
        u, v, h, k, a, a2, nx, ny, nlen = np.broadcast_arrays(
            u, v, h, k, a, a2, nx, ny, nlen
        )
        un = u * nx + v * ny
        ut = -u * ny + v * nx

        lam = np.empty(shape + (4,))
        lam[..., 0] = (un - a) * nlen
        lam[..., 1] = un * nlen
        lam[..., 2] = un * nlen
        lam[..., 3] = (un + a) * nlen

        right = np.empty(shape + (4, 4))
        right[..., 0, 0] = 1.0
        right[..., 1, 0] = u - a * nx
        right[..., 2, 0] = v - a * ny
        right[..., 3, 0] = h - a * un
        right[..., 0, 1] = 1.0
        right[..., 1, 1] = u
        right[..., 2, 1] = v
        right[..., 3, 1] = k
        right[..., 0, 2] = 0.0
        right[..., 1, 2] = -ny
        right[..., 2, 2] = nx
        right[..., 3, 2] = ut
        right[..., 0, 3] = 1.0
        right[..., 1, 3] = u + a * nx
        right[..., 2, 3] = v + a * ny
        right[..., 3, 3] = h + a * un

        b1 = g1 / a2
        b2 = b1 * k
        left = np.empty(shape + (4, 4))
        left[..., 0, 0] = 0.5 * (b2 + un / a)
        left[..., 0, 1] = -0.5 * (b1 * u + nx / a)
        left[..., 0, 2] = -0.5 * (b1 * v + ny / a)
        left[..., 0, 3] = 0.5 * b1
        left[..., 1, 0] = 1.0 - b2
        left[..., 1, 1] = b1 * u
        left[..., 1, 2] = b1 * v
        left[..., 1, 3] = -b1
        left[..., 2, 0] = -ut
        left[..., 2, 1] = -ny
        left[..., 2, 2] = nx
        left[..., 2, 3] = 0.0
        left[..., 3, 0] = 0.5 * (b2 - un / a)
        left[..., 3, 1] = -0.5 * (b1 * u - nx / a)
        left[..., 3, 2] = -0.5 * (b1 * v - ny / a)
        left[..., 3, 3] = 0.5 * b1
        return Eigensystem(lam, right, left)

    # Index of the entropy wave inside the repeated middle eigenvalue pair:
    # its right eigenvector is the one with a nonzero density component.
    ENTROPY_WAVE = 1

    def eigensystem(self, q, n):
        rho, u, v, p = self.primitives(q)
        h = (np.asarray(q, dtype=float)[..., 3] + p) / rho
        return self.eigensystem_primitive(u, v, h, n)

    def max_wavespeed(self, q):
        rho, u, v, p = self.primitives(q)
        a = np.sqrt(self.gamma * p / rho)
        # Componentwise pairing (u + sigma a, v + sigma a) over the three
        # wave families sigma in {-1, 0, +1}.  The squared norm is quadratic
        # in sigma with positive curvature 2 a^2, so the maximum sits at the
        # endpoint sigma = sign(u + v); a single hypot evaluates it.
        sig = np.where(u + v >= 0.0, 1.0, -1.0)
        return np.hypot(u + sig * a, v + sig * a)

    # -- parameter vector ---------------------------------------------------
    def to_params(self, q):
        rho, u, v, p = self.primitives(q)
        srho = np.sqrt(rho)
        h = (np.asarray(q, dtype=float)[..., 3] + p) / rho
        z = np.empty(np.asarray(q).shape, dtype=float)
        z[..., 0] = srho
        z[..., 1] = srho * u
        z[..., 2] = srho * v
        z[..., 3] = srho * h
        return z

    def from_params(self, z):
        z = np.asarray(z, dtype=float)
        if np.any(z[..., 0] <= 0.0):
            raise NonPhysicalState("non-positive sqrt-density in parameter vector")
        g = self.gamma
        q = np.empty_like(z)
        q[..., 0] = z[..., 0] ** 2
        q[..., 1] = z[..., 0] * z[..., 1]
        q[..., 2] = z[..., 0] * z[..., 2]
        q[..., 3] = z[..., 0] * z[..., 3] / g + 0.5 * (g - 1.0) / g * (
            z[..., 1] ** 2 + z[..., 2] ** 2
        )
        return q

    def dqdz(self, z):
        z = np.asarray(z, dtype=float)
        g = self.gamma
        out = np.zeros(z.shape[:-1] + (4, 4))
        out[..., 0, 0] = 2.0 * z[..., 0]
        out[..., 1, 0] = z[..., 1]
        out[..., 1, 1] = z[..., 0]
        out[..., 2, 0] = z[..., 2]
        out[..., 2, 2] = z[..., 0]
        out[..., 3, 0] = z[..., 3] / g
        out[..., 3, 1] = (g - 1.0) / g * z[..., 1]
        out[..., 3, 2] = (g - 1.0) / g * z[..., 2]
        out[..., 3, 3] = z[..., 0] / g
        return out

    # -- derived fields ------------------------------------------------------
    def entropy_deviation(self, q):
        """Relative entropy error against the reference state with s = s_ref.

        s = log(p / rho^gamma); the reference value is log(1/gamma^gamma),
        i.e. the free stream normalized to rho = 1, p = gamma^-gamma.
        """
        rho, _, _, p = self.primitives(q)
        s = np.log(p / rho**self.gamma)
        s_ref = -self.gamma * math.log(self.gamma)
        return (s - s_ref) / abs(s_ref)

    def mach(self, q):
        rho, u, v, p = self.primitives(q)
        return np.hypot(u, v) / np.sqrt(self.gamma * p / rho)

    def freestream(self, mach, aoa_deg=0.0):
        """Reference state: rho = 1, p = gamma^-gamma (so entropy deviation 0)."""
        p = self.gamma**-self.gamma
        a = math.sqrt(self.gamma * p)
        speed = mach * a
        alpha = math.radians(aoa_deg)
        return self.conserved(
            1.0, speed * math.cos(alpha), speed * math.sin(alpha), p
        )


def make_law(kind, **params):
    """Factory used by the config layer."""
    kind = kind.lower()
    if kind == "advection":
        return Advection(params.get("velocity", (1.0, 0.0)))
    if kind in ("rotating-advection", "rotating_advection"):
        return RotatingAdvection(params.get("omega", math.pi))
    if kind == "burgers":
        return Burgers()
    if kind == "euler":
        return Euler(params.get("gamma", 1.4))
    raise InvalidArgument(f"unknown conservation law {kind!r}")
