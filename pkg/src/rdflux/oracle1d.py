"""One-dimensional upwind fluctuations used as verification oracles.

Classic approximate Riemann solvers written in fluctuation form: the jump
between a left and right state is split into a left-going part ``minus``
and a right-going part ``plus`` whose sum is the exact flux difference
f(q_r) - f(q_l).  The two-dimensional relaxation scheme collapses on a
degenerate (segment) element to the local Lax-Friedrichs splitting, which
makes these small, independently checkable routines a ground truth for
the distribution module.

All routines work on a conservation-law object restricted to one space
dimension by fixing the flux direction to (1, 0); scalar laws and the
gas-dynamics system are supported.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

__all__ = ["Fluctuations1D", "llf_1d", "hll_1d", "roe_1d"]

_NX = np.array([1.0, 0.0])


@dataclass(frozen=True)
class Fluctuations1D:
    """Left-going and right-going parts of a 1D interface jump.

    ``minus + plus`` equals the flux difference f(q_r) - f(q_l); the
    steady-state update of the adjacent cells uses one part each.
    """

    minus: np.ndarray
    plus: np.ndarray

    @property
    def total(self):
        return self.minus + self.plus


def _as_state(q, m):
    q = np.asarray(q, dtype=float).reshape(-1)
    if q.shape != (m,):
        raise InvalidArgument(f"state must have {m} components, got shape {q.shape}")
    return q


def _flux_x(law, q):
    """Flux component in the fixed 1D direction, as a length-m vector."""
    fx, _ = law.flux(q[None, :])
    return np.asarray(fx, dtype=float).reshape(-1)


def llf_1d(law, q_left, q_right, s):
    """Local Lax-Friedrichs (Rusanov) splitting with bound ``s``.

    minus = (f(q_r) - f(q_l))/2 - (s/2)(q_r - q_l)
    plus  = (f(q_r) - f(q_l))/2 + (s/2)(q_r - q_l)

    ``s`` must dominate every wave speed of both states; equal states
    give exactly zero parts.
    """
    q_left = _as_state(q_left, law.m)
    q_right = _as_state(q_right, law.m)
    s = float(s)
    df = 0.5 * (_flux_x(law, q_right) - _flux_x(law, q_left))
    dq = 0.5 * s * (q_right - q_left)
    return Fluctuations1D(minus=df - dq, plus=df + dq)


def hll_1d(law, q_left, q_right, s_left, s_right):
    """Two-speed HLL splitting with wave-speed estimates ``s_left < s_right``.

    The middle state follows from integral conservation over the wave
    fan; with s+ = max(0, s) and s- = min(0, s) the parts are

      minus = (s_l^- (f_r - f_l) - s_l^- s_r^+ (q_r - q_l)) / (s_r - s_l)
              + (s_r^- - s_l^-)/(s_r - s_l) * ... (assembled below)

    computed via the equivalent flux-splitting form.  Choosing the
    symmetric pair (-s, s) reproduces ``llf_1d`` identically.
    """
    q_left = _as_state(q_left, law.m)
    q_right = _as_state(q_right, law.m)
    sl = float(s_left)
    sr = float(s_right)
    if sr <= sl:
        raise InvalidArgument(
            f"wave-speed estimates must satisfy s_left < s_right, got {sl} >= {sr}"
        )
    fl = _flux_x(law, q_left)
    fr = _flux_x(law, q_right)
    dq = q_right - q_left
    # Interface flux of the two-wave fan (s^+ = max(0,s), s^- = min(0,s)):
    #   f* = (s_r^+ f_l - s_l^- f_r + s_l^- s_r^+ dq) / (s_r^+ - s_l^-)
    # which degenerates to pure upwinding when both speeds share a sign.
    slm = min(sl, 0.0)
    srp = max(sr, 0.0)
    if srp == slm:  # both estimates zero: stationary fan, split evenly
        fstar = 0.5 * (fl + fr)
    else:
        fstar = (srp * fl - slm * fr + slm * srp * dq) / (srp - slm)
    return Fluctuations1D(minus=fstar - fl, plus=fr - fstar)


def _scalar_secant_speed(law, ql, qr):
    """Mean-value slope of the scalar flux: (f(qr)-f(ql))/(qr-ql)."""
    if ql == qr:
        if hasattr(law, "fprime"):
            return float(law.fprime(np.array([ql]))[0, 0])
        eps = 1e-7 * max(1.0, abs(ql))
        return float(
            (_flux_x(law, np.array([ql + eps])) - _flux_x(law, np.array([ql - eps])))[0]
            / (2 * eps)
        )
    fl = float(_flux_x(law, np.array([ql]))[0])
    fr = float(_flux_x(law, np.array([qr]))[0])
    return (fr - fl) / (qr - ql)


def roe_1d(law, q_left, q_right):
    """Linearized (Roe-type) splitting.

    Scalar laws use the secant slope a = (f(q_r)-f(q_l))/(q_r-q_l), so
    the whole jump travels one way: plus = a^+ dq ... minus = a^- dq.
    The gas-dynamics system linearizes at the sqrt-density-weighted
    average state and splits the jump over the characteristic fields p:

      minus = sum over waves with negative speed of  s_p (l_p . dq) r_p
      plus  = sum over waves with positive speed of  s_p (l_p . dq) r_p

    The average satisfies the flux-difference identity, so the parts sum
    to f(q_r) - f(q_l) exactly (up to rounding).
    """
    q_left = _as_state(q_left, law.m)
    q_right = _as_state(q_right, law.m)
    dq = q_right - q_left

    if law.m == 1:
        a = _scalar_secant_speed(law, float(q_left[0]), float(q_right[0]))
        minus = min(a, 0.0) * dq
        plus = max(a, 0.0) * dq
        return Fluctuations1D(minus=minus, plus=plus)

    if not hasattr(law, "primitives"):
        raise InvalidArgument(
            "linearized splitting supports scalar laws and gas dynamics only"
        )
    rho_l, u_l, v_l, p_l = law.primitives(q_left[None, :])
    rho_r, u_r, v_r, p_r = law.primitives(q_right[None, :])
    wl = float(np.sqrt(rho_l[0]))
    wr = float(np.sqrt(rho_r[0]))
    h_l = float((q_left[3] + p_l[0]) / rho_l[0])
    h_r = float((q_right[3] + p_r[0]) / rho_r[0])
    u = (wl * u_l[0] + wr * u_r[0]) / (wl + wr)
    v = (wl * v_l[0] + wr * v_r[0]) / (wl + wr)
    h = (wl * h_l + wr * h_r) / (wl + wr)
    es = law.eigensystem_primitive(
        np.array([u]), np.array([v]), np.array([h]), _NX[None, :]
    )
    lam = es.lam[0]
    right = es.right[0]
    left = es.left[0]
    amp = left @ dq
    minus = (np.minimum(lam, 0.0) * amp) @ right.T
    plus = (np.maximum(lam, 0.0) * amp) @ right.T
    return Fluctuations1D(minus=minus, plus=plus)
