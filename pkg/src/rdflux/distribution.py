"""Per-triangle residual computation and distribution to nodes.

Two families of distribution schemes are provided:

* the narrow upwind scheme ("N"), scalar and systems forms, built on a
  conservative linearization through the parameter vector; and
* the relaxation-derived scheme ("RXN"), which needs only a wave-speed
  bound — no eigensystem and no matrix inversion per element.

Every function is batched over a leading triangle axis: ``normals`` is
``(T, 3, 2)`` (inward scaled edge normals, as produced by module
``mesh``), ``q_nodes`` is ``(T, 3, m)`` nodal states.  Scalar laws use
``m = 1``.  Residual parts come back as ``(T, 3, m)`` and always sum to
the matching per-triangle total (see ``total_residual_linear`` /
``total_residual_rsd``) up to rounding.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    DegenerateGeometry,
    InvalidArgument,
    StagnationFallback,
)
from .smallmat import reconstruct, solve_batched

__all__ = [
    "DistributedResidual",
    "advection_upwind_k",
    "total_residual_linear",
    "total_residual_rsd",
    "n_scheme_scalar",
    "n_scheme_system",
    "wave_speed_bound",
    "rxn_qstar",
    "rxn_scheme",
    "rxn_full_star",
    "rxn_scheme_1d",
    "split_eigenvalues",
]


@dataclass(frozen=True)
class DistributedResidual:
    """Result of one distribution pass over a batch of triangles."""

    parts: np.ndarray  # (T, 3, m) per-node residual shares
    star: np.ndarray  # (T, m) upwind state
    s: np.ndarray | None = None  # (T,) wave-speed bound (RXN only)
    fallback: np.ndarray | None = None  # (T,) bool: star solve fell back

    @property
    def total(self):
        return self.parts.sum(axis=1)


def _as_batch(q_nodes):
    q_nodes = np.asarray(q_nodes, dtype=float)
    if q_nodes.ndim != 3:
        raise InvalidArgument("q_nodes must have shape (T, nodes, m)")
    return q_nodes


def split_eigenvalues(lam, delta=0.0):
    """Positive/negative parts of eigenvalues, optionally smoothed.

    With ``delta > 0`` the kink of ``|lam|`` is rounded below ``delta``
    (a Harten-style entropy smoothing); ``delta = 0`` gives the exact
    one-sided parts.
    """
    lam = np.asarray(lam, dtype=float)
    if delta > 0.0:
        mag = np.where(
            np.abs(lam) >= delta, np.abs(lam), (lam * lam + delta * delta) / (2.0 * delta)
        )
    else:
        mag = np.abs(lam)
    return 0.5 * (lam + mag), 0.5 * (lam - mag)


# ---------------------------------------------------------------------------
# totals
# ---------------------------------------------------------------------------

def advection_upwind_k(law, tri_xy):
    """Upwind parameters k_i for an advection law from its streamfunction.

    ``tri_xy`` is (T, 3, 2) triangle vertex coordinates.  With psi the
    streamfunction, k_1 = (psi(x_2) - psi(x_3))/2 and cyclic.  The three
    values sum to zero exactly, which makes the assembled scalar upwind
    scheme conservative even for position-dependent velocity fields.
    For constant velocity this equals (u . n_i)/2.
    """
    psi = law.streamfunction(np.asarray(tri_xy, dtype=float))
    k = np.empty_like(psi)
    k[..., 0] = 0.5 * (psi[..., 1] - psi[..., 2])
    k[..., 1] = 0.5 * (psi[..., 2] - psi[..., 0])
    k[..., 2] = 0.5 * (psi[..., 0] - psi[..., 1])
    return k


def _nodal_normal_flux(law, normals, q_nodes, velocity):
    """n_i . f(Q_i) per node, shape (T, 3, m).

    ``velocity`` overrides the law's flux for advection-type problems:
    (T, 2) applies one velocity per triangle, (T, 3, 2) one per node.
    """
    if velocity is not None:
        velocity = np.asarray(velocity, dtype=float)
        if velocity.ndim == 2:
            velocity = velocity[:, None, :]
        un = (velocity * normals).sum(axis=-1)  # (T, 3)
        return un[..., None] * q_nodes
    fx, fy = law.flux(q_nodes)
    return normals[..., 0, None] * fx + normals[..., 1, None] * fy


def total_residual_linear(law, normals, q_nodes, *, velocity=None):
    """Total residual of the interpolated flux, two-point edge rule.

    Equals the outward contour integral of the edgewise-linear
    interpolant of the nodal flux values: (1/2) sum_i n_i . f(Q_i) with
    inward normals n_i.  Zero on uniform states because the normals sum
    to zero.
    """
    q_nodes = _as_batch(q_nodes)
    nf = _nodal_normal_flux(law, np.asarray(normals, dtype=float), q_nodes, velocity)
    return 0.5 * nf.sum(axis=1)


def total_residual_rsd(law, normals, q_nodes):
    """Total residual of the conservative linearization.

    (1/2) sum_i (n_i . J(Zhat)) Qhat_i, with the flux Jacobians evaluated
    at the parameter-vector average.  Because the flux is at most
    quadratic in Z, this equals the exact contour integral of f(z^h) for
    the Z-linear interpolant.
    """
    q_nodes = _as_batch(q_nodes)
    normals = np.asarray(normals, dtype=float)
    avg = law.rsd_average(q_nodes)
    # (T,3,m) = n_i . J applied to Qhat_i
    jq_x = avg.qhat_nodes @ np.swapaxes(avg.jx, -1, -2)
    jq_y = avg.qhat_nodes @ np.swapaxes(avg.jy, -1, -2)
    nf = normals[..., 0, None] * jq_x + normals[..., 1, None] * jq_y
    return 0.5 * nf.sum(axis=1)


# ---------------------------------------------------------------------------
# narrow upwind scheme
# ---------------------------------------------------------------------------

def n_scheme_scalar(law, normals, q_nodes, *, velocity=None, k=None):
    """Scalar upwind scheme: Phi_i = [k_i]+ (Q_i - Q_star).

    The upwind parameters are k_i = (u . n_i)/2.  They come from, in
    order of precedence: the explicit ``k`` array (T, 3) (streamfunction
    form for variable velocity fields); an explicit ``velocity`` ((2,) or
    (T, 2)); or the law's linearized speed at the parameter-vector
    average (exact for constant advection; secant-type mean for scalar
    quadratic fluxes).  Q_star is the inflow state fixed by requiring
    the parts to sum to sum_i k_i Q_i.  Zero flow yields zero parts.
    """
    q_nodes = _as_batch(q_nodes)
    normals = np.asarray(normals, dtype=float)
    q = q_nodes[..., 0]
    if k is not None:
        k = np.asarray(k, dtype=float)
    else:
        if velocity is not None:
            u = np.asarray(velocity, dtype=float)
        else:
            avg = law.rsd_average(q_nodes)
            u = np.stack([avg.jx[..., 0, 0], avg.jy[..., 0, 0]], axis=-1)
        if u.ndim == 1:
            k = 0.5 * (normals * u).sum(axis=-1)
        else:
            k = 0.5 * (normals * u[:, None, :]).sum(axis=-1)
    kp = np.maximum(k, 0.0)
    kn = np.minimum(k, 0.0)
    denom = kn.sum(axis=-1)
    dead = denom == 0.0  # no inflow direction: all k vanish (sum k = 0)
    safe = np.where(dead, 1.0, denom)
    qstar = (kn * q).sum(axis=-1) / safe
    qstar = np.where(dead, q.mean(axis=-1), qstar)
    parts = kp * (q - qstar[..., None])
    parts = np.where(dead[..., None], 0.0, parts)
    return DistributedResidual(parts[..., None], qstar[..., None])


def n_scheme_system(
    law,
    normals,
    q_nodes,
    *,
    on_singular="fallback",
    entropy_delta=0.0,
    safety=1.1,
    average=None,
):
    """Systems upwind scheme via characteristic decomposition.

    Phi_i = K_i^+ (Qhat_i - Q_star) with K_i^{+/-} the signed parts of
    (n_i . J)/2 at the parameter-vector average, and Q_star solving
    (sum K_j^-) Q_star = sum K_j^- Qhat_j.  The star matrix can be
    singular (e.g. near stagnation); ``on_singular`` selects the policy:

    * ``"fallback"``: distribute the affected triangles with the
      relaxation scheme instead (provably conservative, needs no solve);
      the returned ``fallback`` mask marks them.
    * ``"raise"``: raise StagnationFallback carrying the triangle indices.

    ``average`` accepts a precomputed ``law.rsd_average(q_nodes)`` so a
    caller that needs the averaged state anyway (e.g. for limiting) pays
    for it once.
    """
    q_nodes = _as_batch(q_nodes)
    normals = np.asarray(normals, dtype=float)
    if law.m == 1:
        # delegate: for m = 1 the characteristic machinery reduces to the
        # scalar scheme with the linearized speed.
        return n_scheme_scalar(law, normals, q_nodes)
    avg = law.rsd_average(q_nodes) if average is None else average
    es = law.eigensystem(avg.qhat[:, None, :], normals)  # batched over nodes
    lam_p, lam_m = split_eigenvalues(0.5 * es.lam, entropy_delta)
    kplus = reconstruct(lam_p, es.right, es.left)
    kminus = reconstruct(lam_m, es.right, es.left)
    nmat = kminus.sum(axis=1)  # (T, m, m)
    rhs = np.einsum("tnij,tnj->ti", kminus, avg.qhat_nodes)
    qstar, bad = solve_batched(nmat, rhs)
    if bad.any():
        if on_singular == "raise":
            raise StagnationFallback(np.nonzero(bad)[0])
        if on_singular != "fallback":
            raise InvalidArgument("on_singular must be 'fallback' or 'raise'")
    parts = np.einsum("tnij,tnj->tni", kplus, avg.qhat_nodes - qstar[:, None, :])
    if bad.any():
        idx = np.nonzero(bad)[0]
        rx = rxn_scheme(law, normals[idx], q_nodes[idx], safety=safety)
        parts[idx] = rx.parts
        qstar[idx] = rx.star
    return DistributedResidual(parts, qstar, fallback=bad)


# ---------------------------------------------------------------------------
# relaxation scheme
# ---------------------------------------------------------------------------

def wave_speed_bound(law, q_nodes, *, velocity=None, safety=1.1):
    """Per-triangle wave-speed bound s_T.

    The sub-characteristic condition requires s_T at least the largest
    characteristic speed over the element; the bound is taken as
    ``safety`` times the max of the nodal speeds and the arithmetic-mean
    state's speed.  The margin stands in for speeds at intermediate
    states that are not directly computable.  ``velocity`` ((T, 3, 2)
    nodal values) replaces the law's speed for advection by a
    position-dependent field.
    """
    q_nodes = _as_batch(q_nodes)
    if velocity is not None:
        velocity = np.asarray(velocity, dtype=float)
        speeds = np.hypot(velocity[..., 0], velocity[..., 1])
        mean_v = velocity.mean(axis=1)
        mean_speed = np.hypot(mean_v[..., 0], mean_v[..., 1])
        return safety * np.maximum(speeds.max(axis=1), mean_speed)
    nodal = law.max_wavespeed(q_nodes)  # (T, 3)
    mean = law.max_wavespeed(q_nodes.mean(axis=1))
    return safety * np.maximum(nodal.max(axis=-1), mean)


def _rxn_velocity(normals, velocity, policy):
    """Effective per-node and star velocities for advection-field RXN."""
    velocity = np.asarray(velocity, dtype=float)
    if velocity.ndim == 2:
        velocity = np.broadcast_to(velocity[:, None, :], normals.shape)
    if policy == "frozen":
        vbar = velocity.mean(axis=1)
        v_nodes = np.broadcast_to(vbar[:, None, :], normals.shape)
        return v_nodes, vbar
    if policy == "nodal":
        nlen = np.hypot(normals[..., 0], normals[..., 1])  # (T,3)
        wsum = nlen.sum(axis=1, keepdims=True)
        vstar = (nlen[..., None] * velocity).sum(axis=1) / wsum
        return velocity, vstar
    raise InvalidArgument("velocity_policy must be 'frozen' or 'nodal'")


def rxn_qstar(law, normals, q_nodes, s, *, velocity=None, velocity_policy="frozen"):
    """Upwind state of the relaxation scheme (closed form).

    Q_star = sum_j (s ||n_j|| Q_j - n_j . f(Q_j)) / (s sum_i ||n_i||).
    Componentwise for systems.
    """
    q_nodes = _as_batch(q_nodes)
    normals = np.asarray(normals, dtype=float)
    s = np.broadcast_to(np.asarray(s, dtype=float), q_nodes.shape[:1])
    if velocity is not None:
        v_nodes, _ = _rxn_velocity(normals, velocity, velocity_policy)
        nf = _nodal_normal_flux(law, normals, q_nodes, v_nodes)
    else:
        nf = _nodal_normal_flux(law, normals, q_nodes, None)
    nlen = np.hypot(normals[..., 0], normals[..., 1])
    num = (s[:, None, None] * nlen[..., None] * q_nodes - nf).sum(axis=1)
    return num / (s * nlen.sum(axis=1))[:, None]


def rxn_scheme(
    law,
    normals,
    q_nodes,
    *,
    s=None,
    velocity=None,
    velocity_policy="frozen",
    star_flux="pointwise",
    safety=1.1,
):
    """Relaxation distribution scheme (two space dimensions).

    Phi_i = (1/4)[ s ||n_i|| (Q_i - Q_star) + n_i . (f(Q_i) - f(Q_star)) ].

    The parts sum to the two-point-rule total residual because the
    normals sum to zero and Q_star absorbs the flux imbalance.  For
    Euler, f(Q_star) is evaluated only if Q_star is physical; otherwise
    NonPhysicalState is raised (no clamping).

    ``velocity`` enables advection by a position-dependent field.  The
    default ``velocity_policy="frozen"`` evaluates all fluxes at the
    per-triangle mean velocity, which keeps the scheme inside the
    positive-coefficient theory (discrete max principle under the strict
    time step).  ``"nodal"`` uses pointwise nodal velocities with a
    norm-weighted star velocity instead; it is slightly less diffusive
    but preserves constants only approximately.

    ``star_flux="full"`` replaces f(Q_star) by the interface flux from
    the full relaxation star system (see ``rxn_full_star``).
    """
    q_nodes = _as_batch(q_nodes)
    normals = np.asarray(normals, dtype=float)
    if s is None:
        s = wave_speed_bound(law, q_nodes, velocity=velocity, safety=safety)
    else:
        s = np.broadcast_to(np.asarray(s, dtype=float), q_nodes.shape[:1]).copy()
    nlen = np.hypot(normals[..., 0], normals[..., 1])

    if velocity is not None:
        v_nodes, v_star = _rxn_velocity(normals, velocity, velocity_policy)
        nf_nodes = _nodal_normal_flux(law, normals, q_nodes, v_nodes)
        num = (s[:, None, None] * nlen[..., None] * q_nodes - nf_nodes).sum(axis=1)
        qstar = num / (s * nlen.sum(axis=1))[:, None]
        un_star = (v_star[:, None, :] * normals).sum(axis=-1)  # (T,3)
        nf_star = un_star[..., None] * qstar[:, None, :]
    else:
        nf_nodes = _nodal_normal_flux(law, normals, q_nodes, None)
        num = (s[:, None, None] * nlen[..., None] * q_nodes - nf_nodes).sum(axis=1)
        qstar = num / (s * nlen.sum(axis=1))[:, None]
        if star_flux == "full":
            _, mustar = rxn_full_star(law, normals, q_nodes, s)
            nf_star = np.einsum("tnc,tcm->tnm", normals, mustar)
        else:
            law.check_physical(qstar, "in relaxation star state")
            fsx, fsy = law.flux(qstar)
            nf_star = (
                normals[..., 0, None] * fsx[:, None, :]
                + normals[..., 1, None] * fsy[:, None, :]
            )
    parts = 0.25 * (
        s[:, None, None] * nlen[..., None] * (q_nodes - qstar[:, None, :])
        + nf_nodes
        - nf_star
    )
    return DistributedResidual(parts, qstar, s=s)


def rxn_full_star(law, normals, q_nodes, s, *, velocity=None):
    """Full relaxation star state: (Q_star, interface flux mu_star).

    The relaxation Riemann problem couples Q_star with an interface flux
    vector mu_star = (mu1, mu2) through a block linear system; Q_star
    decouples (same closed form as ``rxn_qstar``) and mu_star solves the
    2x2 system G mu = sum_j n_j (nhat_j . f(Q_j) - s Q_j), where
    G = sum_i n_i n_i^T / ||n_i||.  G is positive definite for genuine
    triangles; a determinant below 1e-13 of its natural scale raises
    DegenerateGeometry.
    """
    q_nodes = _as_batch(q_nodes)
    normals = np.asarray(normals, dtype=float)
    s = np.broadcast_to(np.asarray(s, dtype=float), q_nodes.shape[:1])
    nlen = np.hypot(normals[..., 0], normals[..., 1])
    nhat = normals / nlen[..., None]

    if velocity is not None:
        v_nodes, _ = _rxn_velocity(normals, velocity, "frozen")
        nf = _nodal_normal_flux(law, nhat, q_nodes, v_nodes)
    else:
        nf = _nodal_normal_flux(law, nhat, q_nodes, None)

    g = np.einsum("tnc,tnd->tcd", normals, nhat)  # (T, 2, 2)
    det = g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] * g[:, 1, 0]
    scale = np.abs(g[:, 0, 0] * g[:, 1, 1]) + np.abs(g[:, 0, 1] * g[:, 1, 0])
    bad = np.abs(det) <= 1e-13 * scale
    if bad.any():
        raise DegenerateGeometry(
            f"relaxation star system degenerate on triangles {np.nonzero(bad)[0].tolist()}"
        )
    rhs = np.einsum(
        "tnc,tnm->tcm", normals, nf - s[:, None, None] * q_nodes
    )  # (T, 2, m)
    inv = np.empty_like(g)
    inv[:, 0, 0] = g[:, 1, 1]
    inv[:, 1, 1] = g[:, 0, 0]
    inv[:, 0, 1] = -g[:, 0, 1]
    inv[:, 1, 0] = -g[:, 1, 0]
    mustar = np.einsum("tcd,tdm->tcm", inv, rhs) / det[:, None, None]
    qstar = rxn_qstar(law, normals, q_nodes, s, velocity=velocity)
    return qstar, mustar


def rxn_scheme_1d(law, q_left, q_right, s):
    """One-dimensional specialization of the relaxation scheme.

    On a segment the element "normals" are the signed directions -1/+1
    and the star system is square, so the interface flux mu_star is
    determined rather than approximated:

        Q_star  = (Q_l + Q_r)/2 - (f(Q_r) - f(Q_l)) / (2 s)
        mu_star = (f(Q_l) + f(Q_r))/2 - s (Q_r - Q_l) / 2

    Phi_i = (1/2)[ s (Q_i - Q_star) + n_i (f(Q_i) - mu_star) ] then
    reproduces the classic local Lax-Friedrichs fluctuations exactly,
    for any flux and any admissible s.  Returns (minus, plus) parts for
    the left and right states, each (..., m).
    """
    q_left = np.asarray(q_left, dtype=float)
    q_right = np.asarray(q_right, dtype=float)
    s = np.asarray(s, dtype=float)[..., None]
    fl = _flux_1d(law, q_left)
    fr = _flux_1d(law, q_right)
    qstar = 0.5 * (q_left + q_right) - (fr - fl) / (2.0 * s)
    mustar = 0.5 * (fl + fr) - 0.5 * s * (q_right - q_left)
    minus = 0.5 * (s * (q_left - qstar) - (fl - mustar))
    plus = 0.5 * (s * (q_right - qstar) + (fr - mustar))
    return minus, plus


def _flux_1d(law, q):
    fx, _ = law.flux(q)
    return fx
