"""Linear-preserving limiting and the steady-convergence correction.

The raw upwind schemes are monotone but first order at steady state; the
limiter rescales each triangle's distributed parts so the weights stay in
[0, 1] while their sum — and hence conservation — is untouched.  Scalar
residuals are limited directly; system residuals are projected onto the
characteristic fields of the flux Jacobian in a chosen direction, limited
field by field, and reassembled.

The limited scheme alone tends to stall before reaching steady state; a
small dissipative correction proportional to (n_i . J) Phi^T restores
convergence without breaking conservation (the inward normals sum to
zero).  Its strength is throttled near shocks through the projection of
Phi^T onto the entropy wave.
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "limit_scalar",
    "limit_system",
    "limiting_direction",
    "correction_theta",
    "correction_scalar",
    "correction_system",
]

CORRECTION_EPS = 1e-10


def _signed_weights(parts, total):
    """Clipped distribution weights w_i = [Phi_i/Phi^T]^+ / sum_j [...]^+.

    Implemented without dividing by the total: w_i is computed from
    s_i = max(Phi_i * sign(Phi^T), 0), which is proportional to the
    clipped weight and immune to overflow for tiny totals.  Fields with
    zero total get all-zero weights.  Shapes: parts (..., 3, m) and
    total (..., m); weights like parts.
    """
    sgn = np.sign(total)[..., None, :]
    pos = np.maximum(parts * sgn, 0.0)
    den = pos.sum(axis=-2, keepdims=True)
    safe = np.where(den > 0.0, den, 1.0)
    return np.where(den > 0.0, pos / safe, 0.0)


def limit_scalar(parts, total=None):
    """Limit scalar parts: output_i = w_i * Phi^T, weights in [0, 1].

    ``parts`` is (T, 3) or (T, 3, 1); ``total`` defaults to the parts'
    sum.  A zero total yields all-zero outputs.  The outputs sum to the
    total exactly (up to rounding) and each shares its sign.
    """
    parts = np.asarray(parts, dtype=float)
    squeeze = parts.ndim == 2
    if squeeze:
        parts = parts[..., None]
    total = parts.sum(axis=-2) if total is None else np.asarray(total, dtype=float)
    if total.ndim == parts.ndim - 2:
        total = total[..., None]
    out = _signed_weights(parts, total) * total[..., None, :]
    return out[..., 0] if squeeze else out


def limiting_direction(law, qhat):
    """Unit direction used for characteristic projection: the averaged
    flow velocity, falling back to (1, 0) where the flow is essentially
    stagnant (speed below 1e-12 of the sound speed)."""
    rho, u, v, p = law.primitives(qhat)
    a = np.sqrt(law.gamma * p / rho)
    speed = np.hypot(u, v)
    still = speed < 1e-12 * a
    safe = np.where(still, 1.0, speed)
    direction = np.empty(qhat.shape[:-1] + (2,))
    direction[..., 0] = np.where(still, 1.0, u / safe)
    direction[..., 1] = np.where(still, 0.0, v / safe)
    return direction


def limit_system(parts, eigensystem, *, literal=False):
    """Characteristic-wise limiting of system parts.

    ``eigensystem`` is the decomposition of (n . J) in the limiting
    direction at the element-averaged state.  Each part is projected to
    characteristic amplitudes theta_i^p = l^p . Phi_i; the scalar limiter
    runs per field on the amplitudes; the limited parts are reassembled
    from the right eigenvectors.  The per-field amplitude totals are
    redistributed by the clipped weights (so the parts' sum is preserved
    and the m = 1 case reduces to ``limit_scalar``).  ``literal=True``
    instead multiplies each node's own amplitude by its weight — a
    non-conservative variant kept for comparison.
    """
    parts = np.asarray(parts, dtype=float)
    theta = parts @ np.swapaxes(eigensystem.left, -1, -2)
    tot = theta.sum(axis=-2)
    w = _signed_weights(theta, tot)
    coef = w * (theta if literal else tot[..., None, :])
    return coef @ np.swapaxes(eigensystem.right, -1, -2)


def correction_theta(areas, proj, eps=CORRECTION_EPS):
    """Correction strength theta = min(1, |T| / (|proj| + eps)).

    ``proj`` is the magnitude of the total residual's projection onto the
    marker field (entropy wave for gas dynamics, the residual itself for
    scalar laws): theta is O(1) where the solution is smooth and O(|T|)
    near shocks, so the correction switches itself off there.
    """
    areas = np.asarray(areas, dtype=float)
    return np.minimum(1.0, areas / (np.abs(proj) + eps))


def correction_scalar(parts, total, areas, k, eps=CORRECTION_EPS):
    """Add theta |T|^{-1/2} k_i Phi^T to scalar parts.

    ``k`` is the (T, 3) upwind-parameter array of the scheme (equal to
    (n_i . u)/2); the three values sum to zero, so conservation is
    unchanged.  For scalar laws the shock marker is the residual itself.
    """
    parts = np.asarray(parts, dtype=float)
    total = np.asarray(total, dtype=float)
    theta = correction_theta(areas, total[..., 0], eps)
    scale = theta / np.sqrt(np.asarray(areas, dtype=float))
    return parts + (scale[..., None] * k)[..., None] * total[..., None, :]


def correction_system(
    parts, total, areas, normals, jx, jy, ent_left, eps=CORRECTION_EPS
):
    """Add theta |T|^{-1/2} K_i Phi^T to system parts.

    K_i = (n_i . J)/2 at the element-averaged state; only the two
    matrix-vector products J^x Phi^T and J^y Phi^T are formed.
    ``ent_left`` is the left eigenvector of the entropy wave in the
    limiting direction, defining the shock marker |l_ent . Phi^T|.
    """
    parts = np.asarray(parts, dtype=float)
    total = np.asarray(total, dtype=float)
    normals = np.asarray(normals, dtype=float)
    proj = np.einsum("...j,...j->...", ent_left, total)
    theta = correction_theta(areas, proj, eps)
    scale = theta / np.sqrt(np.asarray(areas, dtype=float))
    jxp = np.einsum("...ij,...j->...i", jx, total)
    jyp = np.einsum("...ij,...j->...i", jy, total)
    kphi = 0.5 * (
        normals[..., 0, None] * jxp[..., None, :]
        + normals[..., 1, None] * jyp[..., None, :]
    )
    return parts + scale[..., None, None] * kphi
