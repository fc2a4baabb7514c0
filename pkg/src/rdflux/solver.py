"""Pseudo-time marching of residual-distribution schemes to steady state.

The solver composes the pieces of the library: per-triangle residual
distribution (module ``distribution``), optional positivity-preserving
limiting and the smooth-region accuracy correction (module ``limiting``),
a nodal scatter, a forward pseudo-time update, and strong boundary
enforcement (module ``boundary``).  Marching stops when the update rate
falls below a relative tolerance, the iteration budget runs out, or the
rate grows past a divergence guard.

Two environment variables shape execution:

* ``RD_THREADS``: number of assembly threads (default 1).  Triangles are
  processed in fixed contiguous chunks either way.
* ``RD_DETERMINISTIC``: when truthy (the default), chunk results are
  accumulated in ascending chunk order, which makes repeated runs
  bit-identical; ``0`` permits accumulation in completion order.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass, field

import numpy as np

from . import distribution as dist
from . import limiting
from .errors import Diverged, InvalidArgument, NonPhysicalState, StagnantField

__all__ = [
    "SolverConfig",
    "SolveResult",
    "Solver",
    "run_steady",
    "SCHEMES",
    "DT_MODES",
]

SCHEMES = ("n", "rxn")
DT_MODES = ("upwind", "relaxation")
VELOCITY_POLICIES = ("frozen", "nodal")
STAR_FLUXES = ("pointwise", "full")


def _env_threads():
    raw = os.environ.get("RD_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise InvalidArgument(f"RD_THREADS must be an integer, got {raw!r}") from None
    return max(1, n)


def _env_deterministic():
    return os.environ.get("RD_DETERMINISTIC", "1").strip().lower() not in (
        "0",
        "false",
        "no",
        "",
    )


@dataclass(frozen=True)
class SolverConfig:
    """Knobs of the steady-state solve.

    ``scheme`` picks the distribution family ("n" upwind or "rxn"
    relaxation); ``limited`` and ``corrected`` switch the nonlinear
    limiter and the smooth-region correction on top of it.  The time
    step is ``cfl_fraction`` times the largest provably safe step;
    ``dt_mode="relaxation"`` opts into the stricter bound of the
    relaxation positivity theorem (wave-speed bound times edge lengths)
    instead of the sharper upwind bound.  ``stop_tol`` is relative to
    the first iteration's update rate.  ``n_threads`` and
    ``deterministic`` default to the RD_THREADS / RD_DETERMINISTIC
    environment variables.
    """

    scheme: str = "rxn"
    limited: bool = True
    corrected: bool = True
    cfl_fraction: float = 0.85
    max_iters: int = 20000
    stop_tol: float = 1.0e-10
    divergence_factor: float = 1.0e6
    history_stride: int = 10
    entropy_delta: float = 0.0
    velocity_policy: str = "frozen"
    literal_char_limiter: bool = False
    local_time_stepping: bool = False
    dt_mode: str = "upwind"
    star_flux: str = "pointwise"
    safety: float = 1.1
    n_threads: int | None = None
    deterministic: bool | None = None

    def validate(self):
        if self.scheme not in SCHEMES:
            raise InvalidArgument(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if not 0.0 < self.cfl_fraction <= 1.0:
            raise InvalidArgument("cfl_fraction must lie in (0, 1]")
        if self.max_iters < 1:
            raise InvalidArgument("max_iters must be at least 1")
        if self.stop_tol < 0.0:
            raise InvalidArgument("stop_tol must be nonnegative")
        if self.divergence_factor <= 1.0:
            raise InvalidArgument("divergence_factor must exceed 1")
        if self.history_stride < 1:
            raise InvalidArgument("history_stride must be at least 1")
        if self.dt_mode not in DT_MODES:
            raise InvalidArgument(f"dt_mode must be one of {DT_MODES}, got {self.dt_mode!r}")
        if self.velocity_policy not in VELOCITY_POLICIES:
            raise InvalidArgument(
                f"velocity_policy must be one of {VELOCITY_POLICIES}, got {self.velocity_policy!r}"
            )
        if self.star_flux not in STAR_FLUXES:
            raise InvalidArgument(
                f"star_flux must be one of {STAR_FLUXES}, got {self.star_flux!r}"
            )
        if self.entropy_delta < 0.0:
            raise InvalidArgument("entropy_delta must be nonnegative")
        if self.safety < 1.0:
            raise InvalidArgument("safety must be at least 1")
        if self.n_threads is not None and self.n_threads < 1:
            raise InvalidArgument("n_threads must be at least 1")
        return self

    @property
    def label(self):
        """Human-readable scheme tag, e.g. ``rxn+limit+correction``."""
        tag = self.scheme
        if self.limited:
            tag += "+limit"
        if self.corrected:
            tag += "+correction"
        return tag


@dataclass
class SolveResult:
    """Outcome of a pseudo-time march.

    ``history`` holds (iteration, pseudo_time, relative_update_rate)
    triples sampled every ``history_stride`` iterations plus the first
    and last.  ``reason`` is "converged" or "max_iters"; a run whose
    residual blows past ``divergence_factor`` raises ``Diverged``
    instead of returning.
    """

    q: np.ndarray
    iterations: int
    reason: str
    initial_residual: float
    final_residual: float
    history: list = field(default_factory=list)
    fallback_triangles: int = 0

    @property
    def converged(self):
        return self.reason == "converged"


class Solver:
    """Steady-state driver bound to one mesh, law, and boundary set.

    Per-mesh geometry (scaled inward normals, areas, median dual areas)
    and, for advection laws, the exact streamfunction-integrated upwind
    parameters and nodal velocities are precomputed once.
    """

    def __init__(self, mesh, law, boundaries=None, config=None):
        self.mesh = mesh
        self.law = law
        self.boundaries = boundaries
        self.cfg = (config or SolverConfig()).validate()

        self.tris = np.asarray(mesh.tris)
        self.normals = np.asarray(mesh.normals, dtype=float)
        self.areas = np.asarray(mesh.areas, dtype=float)
        self.dual = np.asarray(mesh.dual_areas, dtype=float)
        self.nlen = np.hypot(self.normals[..., 0], self.normals[..., 1])
        self.n_nodes = mesh.n_nodes

        tri_xy = mesh.tri_coords()
        if hasattr(law, "velocity_at"):
            vel = np.asarray(law.velocity_at(tri_xy), dtype=float)
            self.vel_nodes = np.broadcast_to(vel, tri_xy.shape).copy()
        else:
            self.vel_nodes = None
        if law.m == 1 and hasattr(law, "streamfunction"):
            self.k_static = dist.advection_upwind_k(law, tri_xy)
        else:
            self.k_static = None

        self.n_threads = (
            self.cfg.n_threads if self.cfg.n_threads is not None else _env_threads()
        )
        self.deterministic = (
            self.cfg.deterministic
            if self.cfg.deterministic is not None
            else _env_deterministic()
        )
        self._chunks = self._plan_chunks()
        self._chunk_nodes = [self.tris[sl].ravel() for sl in self._chunks]
        self.tris_flat = self.tris.ravel()
        self._pool = None

    # -- assembly ------------------------------------------------------------

    def _plan_chunks(self):
        n_tris = self.tris.shape[0]
        n = min(self.n_threads, max(1, n_tris))
        bounds = np.linspace(0, n_tris, n + 1).astype(int)
        return [slice(a, b) for a, b in zip(bounds[:-1], bounds[1:]) if b > a]

    def _scatter_add(self, out, flat_nodes, parts):
        """Accumulate per-triangle nodal values into ``out`` (N, m).

        One bincount per component: summation order is fixed by node
        index, so repeated runs accumulate bit-identically.
        """
        n = out.shape[0]
        for j in range(out.shape[1]):
            out[:, j] += np.bincount(
                flat_nodes, weights=parts[..., j].ravel(), minlength=n
            )

    def _scalar_k(self, normals, q_nodes):
        """Upwind parameters (n_i . u)/2 at the linearized scalar speed."""
        avg = self.law.rsd_average(q_nodes)
        u = np.stack([avg.jx[..., 0, 0], avg.jy[..., 0, 0]], axis=-1)
        return 0.5 * (normals * u[..., None, :]).sum(axis=-1)

    def _parts_slice(self, q, sl, s=None):
        """Distributed (and limited/corrected) parts for one triangle chunk."""
        law, cfg = self.law, self.cfg
        normals = self.normals[sl]
        q_nodes = q[self.tris[sl]]
        vel = None if self.vel_nodes is None else self.vel_nodes[sl]
        fallback = 0
        avg = None

        if cfg.scheme == "n":
            if law.m == 1:
                k = None if self.k_static is None else self.k_static[sl]
                res = dist.n_scheme_scalar(law, normals, q_nodes, k=k)
            else:
                avg = law.rsd_average(q_nodes)
                res = dist.n_scheme_system(
                    law,
                    normals,
                    q_nodes,
                    entropy_delta=cfg.entropy_delta,
                    safety=cfg.safety,
                    average=avg,
                )
                if res.fallback is not None:
                    fallback = int(res.fallback.sum())
        else:
            res = dist.rxn_scheme(
                law,
                normals,
                q_nodes,
                s=s,
                velocity=vel,
                velocity_policy=cfg.velocity_policy,
                star_flux=cfg.star_flux,
                safety=cfg.safety,
            )

        parts = res.parts
        if not (cfg.limited or cfg.corrected):
            return parts, fallback
        total = res.total

        if law.m == 1:
            if cfg.limited:
                parts = limiting.limit_scalar(parts, total)
            if cfg.corrected:
                if self.k_static is not None:
                    k = self.k_static[sl]
                else:
                    k = self._scalar_k(normals, q_nodes)
                parts = limiting.correction_scalar(parts, total, self.areas[sl], k)
            return parts, fallback

        if avg is None:
            avg = law.rsd_average(q_nodes)
        direction = limiting.limiting_direction(law, avg.qhat)
        es = law.eigensystem(avg.qhat, direction)
        if cfg.limited:
            parts = limiting.limit_system(parts, es, literal=cfg.literal_char_limiter)
        if cfg.corrected:
            wave = getattr(law, "ENTROPY_WAVE", 0)
            parts = limiting.correction_system(
                parts,
                total,
                self.areas[sl],
                normals,
                avg.jx,
                avg.jy,
                es.left[..., wave, :],
            )
        return parts, fallback

    def assemble(self, q, s=None):
        """Nodal residual sums R_i = sum over incident triangles of Phi_i.

        Returns ``(residual (N, m), fallback_count)``.  ``s`` passes a
        precomputed per-triangle wave-speed bound to the relaxation
        scheme (the marching loop shares one evaluation between the
        scheme and the step-size rule).  Accumulation order is fixed in
        deterministic mode; with several threads and determinism off,
        chunks land in completion order.
        """
        q = np.asarray(q, dtype=float)
        out = np.zeros((self.n_nodes, self.law.m))
        if len(self._chunks) == 1:
            sl = self._chunks[0]
            parts, fallback = self._parts_slice(q, sl, None if s is None else s[sl])
            self._scatter_add(out, self._chunk_nodes[0], parts)
            return out, fallback

        if self._pool is None:
            self._pool = ThreadPoolExecutor(max_workers=self.n_threads)
        futures = {
            self._pool.submit(
                self._parts_slice, q, sl, None if s is None else s[sl]
            ): i
            for i, sl in enumerate(self._chunks)
        }
        fallback = 0
        if self.deterministic:
            ordered = sorted(futures, key=futures.get)
        else:
            ordered = as_completed(futures)
        for fut in ordered:
            parts, n_fb = fut.result()
            self._scatter_add(out, self._chunk_nodes[futures[fut]], parts)
            fallback += n_fb
        return out, fallback

    # -- time step -----------------------------------------------------------

    def _tri_bound(self, q):
        """Per-triangle wave-speed bound, shared by scheme and step size.

        Returns None for configurations that never consume it (upwind
        step sizing with the characteristic-decomposition scheme).
        """
        if self.cfg.scheme != "rxn" and self.cfg.dt_mode != "relaxation":
            return None
        q_nodes = np.asarray(q, dtype=float)[self.tris]
        return dist.wave_speed_bound(
            self.law, q_nodes, velocity=self.vel_nodes, safety=self.cfg.safety
        )

    def _inflow_coefficients(self, q, s=None):
        """Nodal coefficients D_i bounding the update: dt_i <= 2 |C_i| / D_i."""
        law, cfg = self.law, self.cfg
        q_nodes = np.asarray(q, dtype=float)[self.tris]
        if cfg.dt_mode == "relaxation":
            if s is None:
                s = dist.wave_speed_bound(
                    law, q_nodes, velocity=self.vel_nodes, safety=cfg.safety
                )
            contrib = self.nlen * s[:, None]
        elif law.m == 1:
            if self.k_static is not None:
                k = self.k_static
            else:
                k = self._scalar_k(self.normals, q_nodes)
            contrib = np.maximum(2.0 * k, 0.0)
        elif hasattr(law, "primitives"):
            rho, u, v, p = law.primitives(q_nodes)
            rho_m = rho.mean(axis=1)
            u_m = u.mean(axis=1)
            v_m = v.mean(axis=1)
            p_m = p.mean(axis=1)
            a = np.sqrt(law.gamma * p_m / rho_m)
            un = u_m[:, None] * self.normals[..., 0] + v_m[:, None] * self.normals[..., 1]
            contrib = np.maximum(un + a[:, None] * self.nlen, 0.0)
        else:
            if s is None:
                s = dist.wave_speed_bound(
                    law, q_nodes, velocity=self.vel_nodes, safety=cfg.safety
                )
            contrib = self.nlen * s[:, None]
        return np.bincount(
            self.tris_flat, weights=contrib.ravel(), minlength=self.n_nodes
        )

    def stable_dt(self, q, s=None):
        """Largest provably safe step times ``cfl_fraction``.

        Nodes with zero inflow coefficient impose no bound and are
        skipped; if every node is unconstrained the field cannot evolve
        and StagnantField is raised.  With ``local_time_stepping`` the
        return is per-node (unconstrained nodes get the global value).
        ``s`` passes a precomputed per-triangle wave-speed bound.
        """
        d = self._inflow_coefficients(q, s)
        pos = d > 0.0
        if not pos.any():
            raise StagnantField(
                "no wave crosses any dual-cell boundary; the time step is unbounded"
            )
        bounds = 2.0 * self.dual[pos] / d[pos]
        dt_global = self.cfg.cfl_fraction * bounds.min()
        if not self.cfg.local_time_stepping:
            return dt_global
        dt = np.full(self.n_nodes, dt_global)
        dt[pos] = self.cfg.cfl_fraction * 2.0 * self.dual[pos] / d[pos]
        return dt

    # -- marching ------------------------------------------------------------

    def step(self, q, dt=None, s=None):
        """One forward pseudo-time step.

        Returns ``(q_new, update_rate, fallback_count)`` where the rate
        is the nodal L2 norm of |C_i| (q_new - q) / dt measured *after*
        boundary enforcement, so it vanishes exactly at a steady state
        compatible with the boundary conditions.  ``s`` passes a
        precomputed per-triangle wave-speed bound to both the step-size
        rule and the relaxation scheme.
        """
        q = np.asarray(q, dtype=float)
        if dt is None:
            if s is None:
                s = self._tri_bound(q)
            dt = self.stable_dt(q, s)
        dt_col = dt[:, None] if np.ndim(dt) == 1 else dt
        residual, fallback = self.assemble(q, s)
        q_new = q - dt_col / self.dual[:, None] * residual
        if self.boundaries is not None:
            self.boundaries.apply(q_new)
        if not np.isfinite(q_new).all():
            bad = int(np.nonzero(~np.isfinite(q_new).all(axis=1))[0][0])
            raise NonPhysicalState(f"non-finite state at node {bad}")
        self.law.check_physical(q_new)
        rate = self.dual[:, None] * (q_new - q) / dt_col
        return q_new, float(np.sqrt((rate * rate).sum())), fallback

    def march(self, q0, *, callback=None):
        """Iterate to steady state from ``q0`` ((N, m) or (N,) for m=1).

        Boundary conditions are enforced on the initial state.  The
        stopping test compares each iteration's update rate with the
        first one's; a first rate already at rounding level (below
        1e-13 of the rate scale of the state itself) counts as
        converged immediately when ``stop_tol`` is positive.
        ``callback(iteration, q, relative_rate)`` runs every iteration.
        """
        cfg = self.cfg
        q = np.array(q0, dtype=float)
        if q.ndim == 1:
            q = q[:, None]
        if q.shape != (self.n_nodes, self.law.m):
            raise InvalidArgument(
                f"initial state must have shape ({self.n_nodes}, {self.law.m}), got {q.shape}"
            )
        if self.boundaries is not None:
            self.boundaries.apply(q)
        self.law.check_physical(q, "in initial state")

        history = []
        r0 = None
        rel = np.inf
        t = 0.0
        reason = "max_iters"
        it = 0
        fallback_total = 0
        for it in range(1, cfg.max_iters + 1):
            s = self._tri_bound(q)
            dt = self.stable_dt(q, s)
            try:
                q_new, rate, n_fb = self.step(q, dt, s)
            except NonPhysicalState as exc:
                raise NonPhysicalState(f"iteration {it}: {exc}") from exc
            fallback_total += n_fb
            t += float(dt) if np.ndim(dt) == 0 else float(np.min(dt))
            if r0 is None:
                r0 = rate
                rel = 1.0
                if cfg.stop_tol > 0.0 and r0 <= 1.0e-13 * self._rate_scale(q, dt):
                    q = q_new
                    history.append((it, t, 0.0))
                    reason = "converged"
                    rel = 0.0
                    if callback is not None:
                        callback(it, q, rel)
                    break
            else:
                rel = rate / r0 if r0 > 0.0 else 0.0
            if it == 1 or it % cfg.history_stride == 0:
                history.append((it, t, rel))
            q = q_new
            if callback is not None:
                callback(it, q, rel)
            if rel <= cfg.stop_tol:
                reason = "converged"
                break
            if not np.isfinite(rel) or rel > cfg.divergence_factor:
                raise Diverged(
                    f"iteration {it}: relative residual {rel:.3e} exceeds "
                    f"{cfg.divergence_factor:.1e} times the initial rate"
                )
        if not history or history[-1][0] != it:
            history.append((it, t, rel))
        return SolveResult(
            q=q,
            iterations=it,
            reason=reason,
            initial_residual=float(r0 if r0 is not None else 0.0),
            final_residual=float(rel),
            history=history,
            fallback_triangles=fallback_total,
        )

    def _rate_scale(self, q, dt):
        """Rate magnitude of the state itself, |C| |q| / dt, for floors."""
        dt_col = dt[:, None] if np.ndim(dt) == 1 else dt
        ref = self.dual[:, None] * q / dt_col
        return max(float(np.sqrt((ref * ref).sum())), 1.0e-300)


def run_steady(mesh, law, boundaries=None, q0=None, config=None, callback=None):
    """One-call convenience: build a Solver and march ``q0`` to steady state."""
    if q0 is None:
        raise InvalidArgument("an initial state q0 is required")
    return Solver(mesh, law, boundaries, config).march(q0, callback=callback)
