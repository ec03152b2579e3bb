"""Classical RKDG discretization of ``U_t + f(U)_x = 0`` with ``f = (-v, -sigma(u))``.

Serves as the comparison baseline and as the generator of fine-mesh
reference solutions for error tables.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from elastodg.constitutive import ConstitutiveLaw
from elastodg.errors import InvalidArgument, NumericalError
from elastodg.flux import InterfaceState, llf_system_flux
from elastodg.limiters import LimiterConfig, apply_limiter
from elastodg.mesh import DGFunction, DGSpace, build_mesh, project_l2
from elastodg.variational import FixedRatio, step_count_and_sizes

INTEGRATORS = ("euler", "tvd_rk3")


@dataclass
class RKDGConfig:
    time_integrator: str = "tvd_rk3"
    ratio: float = 1.0 / 12.0  # Courant number, see FixedRatio
    limiter: LimiterConfig = field(default_factory=LimiterConfig)

    def __post_init__(self):
        if self.time_integrator not in INTEGRATORS:
            raise InvalidArgument(f"unknown integrator {self.time_integrator!r}")
        if not self.ratio > 0:
            raise InvalidArgument("k/h must be positive")


def semidiscrete_rhs(u: DGFunction, v: DGFunction, law: ConstitutiveLaw):
    """Coefficient time derivatives ``(dC/dt, dD/dt)``.

    Per cell and degree: ``M dC/dt = (f(U_h), phi_x) - [f_hat phi]`` with the
    LLF flux at every interface.
    """
    space = u.space
    B, dB = space.basis_at_nodes, space.dbasis_at_nodes
    w = space.quad_weights
    sgn = space.signs
    uq = u.coeffs @ B
    vq = v.coeffs @ B
    vol_u = (-vq * w) @ dB.T
    vol_v = (-law.sigma(uq) * w) @ dB.T
    st = InterfaceState(
        u_minus=u.right_traces,
        u_plus=np.roll(u.left_traces, -1),
        v_minus=v.right_traces,
        v_plus=np.roll(v.left_traces, -1),
    )
    fu, fv = llf_system_flux(law, st)

    def surface(fh):
        return fh[:, None] - sgn[None, :] * np.roll(fh, 1)[:, None]

    M = space.mass_diag
    return (vol_u - surface(fu)) / M, (vol_v - surface(fv)) / M


def _lim(u, v, law, limiter):
    return apply_limiter(u, v, law, limiter) if limiter is not None else (u, v)


def step_euler(u, v, k, law, limiter=None):
    du, dv = semidiscrete_rhs(u, v, law)
    return _lim(DGFunction(u.space, u.coeffs + k * du), DGFunction(v.space, v.coeffs + k * dv), law, limiter)


def step_tvd_rk3(u, v, k, law, limiter=None):
    """Third-order TVD (SSP) Runge-Kutta; the limiter follows every stage."""
    sp = u.space
    C0, D0 = u.coeffs, v.coeffs
    du, dv = semidiscrete_rhs(u, v, law)
    u1, v1 = _lim(DGFunction(sp, C0 + k * du), DGFunction(sp, D0 + k * dv), law, limiter)
    du, dv = semidiscrete_rhs(u1, v1, law)
    u2, v2 = _lim(
        DGFunction(sp, 0.75 * C0 + 0.25 * (u1.coeffs + k * du)),
        DGFunction(sp, 0.75 * D0 + 0.25 * (v1.coeffs + k * dv)),
        law,
        limiter,
    )
    du, dv = semidiscrete_rhs(u2, v2, law)
    return _lim(
        DGFunction(sp, C0 / 3.0 + 2.0 / 3.0 * (u2.coeffs + k * du)),
        DGFunction(sp, D0 / 3.0 + 2.0 / 3.0 * (v2.coeffs + k * dv)),
        law,
        limiter,
    )


def run_rkdg(u0, v0, T, config: RKDGConfig, *, space=None, law, time_step=None, callback=None):
    """Integrate to ``T``; returns ``(u, v, steps)``.

    ``time_step`` defaults to ``FixedRatio(config.ratio)``; the last step
    lands on ``T``.
    """
    u = u0.copy() if isinstance(u0, DGFunction) else project_l2(u0, space)
    v = v0.copy() if isinstance(v0, DGFunction) else project_l2(v0, u.space)
    limiter = config.limiter if config.limiter.kind != "none" else None
    u, v = _lim(u, v, law, limiter)
    step = step_euler if config.time_integrator == "euler" else step_tvd_rk3
    rule = time_step or FixedRatio(config.ratio)
    n = 0
    t = 0.0
    for k in step_count_and_sizes(T, lambda: rule(u, law)):
        u, v = step(u, v, k, law, limiter)
        n += 1
        if not (np.all(np.isfinite(u.coeffs)) and np.all(np.isfinite(v.coeffs))):
            raise NumericalError("RKDG solution became non-finite", {"step": n, "t": t + k, "k": k})
        t += k
        if callback is not None:
            callback(t, u, v)
    return u, v, n


# ---------------------------------------------------------------------------
# reference solutions


@dataclass
class ReferenceSolution:
    """Point samples ``(x, u, v)`` of a high-resolution solution at time ``t``."""

    x: np.ndarray
    u: np.ndarray
    v: np.ndarray
    t: float = 0.0
    meta: dict = field(default_factory=dict)

    def lookup(self, points: np.ndarray, atol: float = 1e-10):
        """Values at ``points``; every point must be one of the stored samples."""
        pts = np.asarray(points, dtype=float)
        flat = pts.ravel()
        idx = np.clip(np.searchsorted(self.x, flat), 0, self.x.size - 1)
        lo = np.clip(idx - 1, 0, self.x.size - 1)
        pick = np.where(np.abs(self.x[lo] - flat) < np.abs(self.x[idx] - flat), lo, idx)
        if np.any(np.abs(self.x[pick] - flat) > atol):
            raise InvalidArgument("reference solution does not cover the requested sample points")
        return self.u[pick].reshape(pts.shape), self.v[pick].reshape(pts.shape)

    def save(self, path):
        header = " ".join(f"{k}={v}" for k, v in sorted(self.meta.items()))
        data = np.column_stack([self.x, self.u, self.v])
        with open(path, "w") as fh:
            fh.write(f"# t={self.t!r} {header}\n")
            fh.write("x u v\n")
            np.savetxt(fh, data, fmt="%.17e")

    @classmethod
    def load(cls, path):
        path = Path(path)
        with open(path) as fh:
            first = fh.readline()
            fh.readline()
            data = np.loadtxt(fh, ndmin=2)
        meta = dict(tok.split("=", 1) for tok in first[1:].split() if "=" in tok)
        t = float(meta.pop("t", 0.0))
        return cls(data[:, 0], data[:, 1], data[:, 2], t, meta)


def sample_points(space: DGSpace) -> np.ndarray:
    """Quadrature nodes and interfaces of ``space``: where errors are measured."""
    return np.concatenate([space.node_coordinates.ravel(), space.mesh.interfaces])


def generate_reference(
    u0,
    v0,
    T: float,
    law: ConstitutiveLaw,
    *,
    x_left: float,
    x_right: float,
    N: int = 2560,
    K: int = 3,
    cfl: float = 0.05,
    points=None,
    limiter: LimiterConfig | None = None,
) -> ReferenceSolution:
    """High-order RK3 reference, sampled at ``points`` (sorted, deduplicated)."""
    space = DGSpace(build_mesh(x_left, x_right, N), K)
    cfg = RKDGConfig("tvd_rk3", 1.0, limiter or LimiterConfig())
    u, v, steps = run_rkdg(u0, v0, T, cfg, space=space, law=law, time_step=FixedRatio(cfl))
    if points is None:
        points = sample_points(space)
    x = np.unique(np.round(np.asarray(points, dtype=float).ravel(), 13))
    meta = {"N": N, "K": K, "cfl": cfl, "steps": steps}
    return ReferenceSolution(x, u.evaluate(x), v.evaluate(x), T, meta)
