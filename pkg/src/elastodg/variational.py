"""Time stepping by constrained gradient descent on the discrete energy.

Each time step ``(u^{j-1}, v^{j-1}) -> (u^j, v^j)`` minimizes

    I[u, v] = int (v - v^{j-1})^2 / 2 + W(u) dx

over DG pairs tied together by the discrete constraint ``(u - u^{j-1})/k = v_x``
(DG derivative with LLF trace ``v_hat``). One GD iteration is

    (M + mu/h J) D_{l+1} = M (D_l - lam (D_l - D^{j-1})) - lam k S_l
    M C_{l+1}            = M C^{j-1} - k A^T D_{l+1} + k B_l

where ``D``/``C`` are the velocity/strain coefficients, ``J`` the interface
jump penalty and ``B_l`` the flux boundary term. ``v_hat`` uses velocity
traces of iterate ``l+1`` and strain traces (and the LLF speed) of the previous
time level ``u^{j-1}``, so the constraint is one fixed affine map ``D -> C`` for
the whole time step and every step is an exact convex minimization.
``GDConfig(u_traces="iterate")`` takes strain traces from iterate ``l``
instead; it converges in practice but its fixed point is not the constrained
minimizer and the objective may increase between iterations.

``S_l`` is the exact derivative of ``int W(u(D))`` through that affine map:
with ``g`` the L2 projection of ``sigma(u_l)``,

    S_l = (g, phi_x) - [ {g} phi ]

where ``{g}`` is the interface average. The boundary part vanishes only when
``g`` is continuous; keeping it makes constant states exact fixed points.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from elastodg.constitutive import ConstitutiveLaw, wave_speed
from elastodg.errors import InvalidArgument, NumericalError
from elastodg.flux import InterfaceState, dissipative_v_hat
from elastodg.mesh import (
    DGFunction,
    DGSpace,
    SystemMatrices,
    assemble_matrices,
    derivative_coupling,
    project_l2,
)


@dataclass
class GDConfig:
    lambda_init: float = 0.25
    tol_I: float = 1e-14
    tol_u: float = 1e-14
    max_iter: int = 250
    adaptive: bool = False
    c_roff: float = 1e-10
    lambda_min: float = 0.25
    lambda_max: float = math.inf
    grow_factor: float = 1.5
    shrink_factor: float = 0.4
    # "none": the running cap starts at lambda_max; "spectral": at most step_bound()
    lambda_cap: str = "none"
    # start each time step from the previous step's final lambda
    warm_start: bool = False
    # strain traces in v_hat: "previous" time level or current "iterate"
    u_traces: str = "previous"
    record_history: bool = False

    def __post_init__(self):
        if not self.lambda_init > 0:
            raise InvalidArgument("lambda_init must be positive")
        if not (self.tol_I > 0 and self.tol_u > 0):
            raise InvalidArgument("tolerances must be positive")
        if int(self.max_iter) != self.max_iter or self.max_iter < 1:
            raise InvalidArgument("max_iter must be an integer >= 1")
        if self.lambda_cap not in ("spectral", "none"):
            raise InvalidArgument(f"unknown lambda_cap {self.lambda_cap!r}")
        if self.u_traces not in ("previous", "iterate"):
            raise InvalidArgument(f"unknown u_traces {self.u_traces!r}")


@dataclass
class StepReport:
    iterations: int
    converged_by: str  # "tolerances" or "max-iterations"
    objective: float
    rejected_steps: int
    final_lambda: float
    last_dI: float = math.nan
    last_du: float = math.nan
    objective_history: list = field(default_factory=list)


@dataclass
class TimeStepState:
    u_prev: DGFunction
    v_prev: DGFunction
    u_cur: DGFunction
    v_cur: DGFunction
    k: float
    objective_history: list = field(default_factory=list)
    lambda_cur: float = 0.25
    lambda_lmax: float = math.inf

    @classmethod
    def start(cls, u_prev, v_prev, k, lam=0.25):
        return cls(u_prev, v_prev, u_prev.copy(), v_prev.copy(), k, [], lam, math.inf)


# ---------------------------------------------------------------------------
# coefficient-level kernels (arrays of shape (N, K+1))


def _objective(space: DGSpace, C, D, Dp, law) -> float:
    B = space.basis_at_nodes
    u = C @ B
    dv = (D - Dp) @ B
    return space.integrate(0.5 * dv * dv + law.W(u))


def _sigma_projection(space: DGSpace, C, law) -> np.ndarray:
    """Legendre coefficients of the L2 projection of ``sigma(u_h)``."""
    B = space.basis_at_nodes
    s = law.sigma(C @ B)
    scale = (2 * np.arange(space.n_modes) + 1.0) / 2.0
    return (s * space.quad_weights) @ B.T * scale


def _stiffness(space: DGSpace, A, C, law) -> np.ndarray:
    g = _sigma_projection(space, C, law)
    sgn = space.signs
    gbar = 0.5 * (g.sum(axis=1) + np.roll(g @ sgn, -1))
    boundary = gbar[:, None] - sgn[None, :] * np.roll(gbar, 1)[:, None]
    return g @ A - boundary


def _flux_term(space: DGSpace, D, C_trace, law) -> np.ndarray:
    """``B`` vector: ``v_hat phi`` evaluated from the left to the right cell end."""
    sgn = space.signs
    v_m = D.sum(axis=1)
    v_p = np.roll(D @ sgn, -1)
    u_m = C_trace.sum(axis=1)
    u_p = np.roll(C_trace @ sgn, -1)
    vhat = dissipative_v_hat(law, InterfaceState(u_m, u_p, v_m, v_p))
    return vhat[:, None] - sgn[None, :] * np.roll(vhat, 1)[:, None]


def _v_update(mats: SystemMatrices, C, D, Dp, k, lam, law):
    S = _stiffness(mats.space, mats.A, C, law)
    rhs = mats.M * (D - lam * (D - Dp)) - lam * k * S
    return mats.solve_K(rhs)


def _u_update(mats: SystemMatrices, Cp, Dn, k, law, C_trace=None):
    B = _flux_term(mats.space, Dn, Cp if C_trace is None else C_trace, law)
    return Cp + k * (B - Dn @ mats.A) / mats.M


def constraint_operator(space: DGSpace) -> sp.csr_matrix:
    """Sparse ``T`` with ``C_{l+1} = C^{j-1} + k (T D_{l+1}) + const``.

    ``T`` is the velocity-dependent part of the strain update: interface
    averages of the velocity traces minus ``A^T D``, divided by the mass.
    Dofs are ordered as ``coeffs.ravel()``.
    """
    N, n = space.N, space.n_modes
    sgn = space.signs
    A = derivative_coupling(space.degree)
    rows, cols, vals = [], [], []
    cell = np.arange(N)
    for l in range(n):
        for lp in range(n):
            own = 0.5 - 0.5 * sgn[l] * sgn[lp] - A[lp, l]
            for nb, val in ((cell, own), ((cell + 1) % N, 0.5 * sgn[lp]), ((cell - 1) % N, -0.5 * sgn[l])):
                rows.append(cell * n + l)
                cols.append(nb * n + lp)
                vals.append(np.full(N, val))
    T = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(N * n, N * n)
    ).tocsr()
    return sp.diags(1.0 / space.mass_diag.ravel()) @ T


def constraint_gain(mats: SystemMatrices) -> float:
    """Largest ``|T x|_M^2 / x^T (M + mu/h J) x``, cached on ``mats``.

    Times ``k^2 max sigma'`` this bounds the curvature of ``int W(u)`` seen
    by the preconditioned velocity update.
    """
    cache = mats.__dict__.setdefault("_gd_cache", {})
    if "gain" not in cache:
        T = constraint_operator(mats.space)
        G = (T.T @ sp.diags(mats.M.ravel()) @ T).tocsc()
        n = G.shape[0]
        if n <= 1200:
            top = sla.eigh(G.toarray(), mats.Kmat.toarray(), eigvals_only=True, subset_by_index=[n - 1, n - 1])
            cache["gain"] = float(top[0])
        else:
            vals = spla.eigsh(G, k=1, M=mats.Kmat, which="LA", v0=np.ones(n), tol=1e-8, return_eigenvectors=False)
            cache["gain"] = float(vals[0])
    return cache["gain"]


def step_bound(mats: SystemMatrices, k: float, u_prev: DGFunction, law: ConstitutiveLaw) -> float:
    """A-priori GD step ``2 / (m_min + m_max)`` for one time step.

    The preconditioned Hessian of the objective has spectrum in
    ``[1, m_max]`` on continuous velocity fields, with
    ``m_max = 1 + k^2 max sigma'(u) * constraint_gain``. Steps above
    ``2 / m_max`` amplify the highest (zig-zag) mode; ``2 / (1 + m_max)``
    balances the slowest and fastest contraction.
    """
    m_max = 1.0 + (k * max_wave_speed(u_prev, law)) ** 2 * constraint_gain(mats)
    return 2.0 / (1.0 + m_max)


# ---------------------------------------------------------------------------
# public operations


def objective(u: DGFunction, v: DGFunction, v_prev: DGFunction, law: ConstitutiveLaw) -> float:
    """``int (v - v_prev)^2/2 + W(u) dx`` over the whole mesh."""
    if not (u.space is v.space is v_prev.space):
        raise InvalidArgument("u, v and v_prev must share one DG space")
    return _objective(u.space, u.coeffs, v.coeffs, v_prev.coeffs, law)


def stiffness_vector(u: DGFunction, matrices: SystemMatrices, law: ConstitutiveLaw) -> np.ndarray:
    """``S`` for the strain iterate ``u``, shape ``(N, K+1)``."""
    return _stiffness(u.space, matrices.A, u.coeffs, law)


def gd_update_v(state: TimeStepState, matrices: SystemMatrices, law: ConstitutiveLaw, lam: float) -> np.ndarray:
    return _v_update(
        matrices, state.u_cur.coeffs, state.v_cur.coeffs, state.v_prev.coeffs, state.k, lam, law
    )


def constraint_update_u(state: TimeStepState, matrices: SystemMatrices, law: ConstitutiveLaw, D_next) -> np.ndarray:
    return _u_update(matrices, state.u_prev.coeffs, np.asarray(D_next), state.k, law)


def adapt_lambda(I_prev, I_cur, I_next, lam, lam_lmax, config: GDConfig):
    """Step-size heuristic; returns ``(lam, lam_lmax, accepted)``.

    Growth on decrease is capped by ``lam_lmax``; a sharp increase (more than
    five times the previous decrease, and above ``c_roff``) rejects the
    iterate, shrinks ``lam`` (not below ``lambda_min``) and lowers the cap.
    """
    dI = abs(I_next - I_cur)
    if I_next < I_cur:
        return min(config.grow_factor * lam, lam_lmax), lam_lmax, True
    if dI > -5.0 * (I_cur - I_prev) and dI > config.c_roff and lam > config.lambda_min:
        lam = max(config.shrink_factor * lam, config.lambda_min)
        return lam, lam, False
    return lam, lam_lmax, True


def solve_time_step(
    u_prev: DGFunction,
    v_prev: DGFunction,
    k: float,
    config: GDConfig,
    matrices: SystemMatrices,
    law: ConstitutiveLaw,
    lambda_start: float | None = None,
):
    """Run GD from ``(u_prev, v_prev)`` until both tolerances hold or ``max_iter``."""
    if not k > 0:
        raise InvalidArgument("time step k must be positive")
    space = u_prev.space
    Cp, Dp = u_prev.coeffs, v_prev.coeffs
    C, D = Cp.copy(), Dp.copy()
    I_hist = [_objective(space, C, D, Dp, law)]
    lam = config.lambda_init if lambda_start is None else lambda_start
    lam_lmax = config.lambda_max
    if config.adaptive and config.lambda_cap == "spectral":
        lam_lmax = min(lam_lmax, step_bound(matrices, k, u_prev, law))
    rejected = 0
    converged = False
    dI = du = math.nan
    it = 0
    while it < config.max_iter:
        it += 1
        Dn = _v_update(matrices, C, D, Dp, k, lam, law)
        Cn = _u_update(matrices, Cp, Dn, k, law, C if config.u_traces == "iterate" else None)
        In = _objective(space, Cn, Dn, Dp, law)
        if not math.isfinite(In):
            raise NumericalError(
                "objective became non-finite",
                {"iteration": it, "lambda": lam, "k": k, "last_objective": I_hist[-1]},
            )
        if config.adaptive and it > 2:
            lam, lam_lmax, accepted = adapt_lambda(I_hist[-2], I_hist[-1], In, lam, lam_lmax, config)
            if not accepted:
                rejected += 1
                continue
        dI = abs(In - I_hist[-1])
        diff = Cn - C
        du = math.sqrt(float(np.sum(matrices.M * diff * diff)))
        C, D = Cn, Dn
        I_hist.append(In)
        if dI < config.tol_I and du < config.tol_u:
            converged = True
            break
    report = StepReport(
        iterations=it,
        converged_by="tolerances" if converged else "max-iterations",
        objective=I_hist[-1],
        rejected_steps=rejected,
        final_lambda=lam,
        last_dI=dI,
        last_du=du,
        objective_history=I_hist if config.record_history else [],
    )
    return DGFunction(space, C), DGFunction(space, D), report


# ---------------------------------------------------------------------------
# time-step rules


def max_wave_speed(u: DGFunction, law) -> float:
    """``max sqrt(sigma'(u_h))`` over quadrature nodes and cell traces."""
    pts = np.concatenate([u.at_nodes().ravel(), u.left_traces, u.right_traces])
    return float(np.max(wave_speed(law, pts)))


@dataclass(frozen=True)
class FixedRatio:
    """Courant rule ``k = ratio * h_min / max sqrt(sigma'(u_h))``.

    ``ratio`` is the ``k/h`` of the experiments measured in units of the
    largest wave speed; it is re-evaluated every step.
    """

    ratio: float

    def __post_init__(self):
        if not self.ratio > 0:
            raise InvalidArgument("k/h ratio must be positive")

    def __call__(self, u: DGFunction, law) -> float:
        return self.ratio * u.space.mesh.h_min / max_wave_speed(u, law)


@dataclass(frozen=True)
class RateStudyRule:
    """``k = c_RK h^2 / max sqrt(sigma'(u_h))``, re-evaluated every step."""

    c_rk: float = 0.125

    def __call__(self, u: DGFunction, law) -> float:
        h = u.space.mesh.h_min
        return self.c_rk * h * h / max_wave_speed(u, law)


@dataclass
class SimulationResult:
    u: DGFunction
    v: DGFunction
    u0: DGFunction
    v0: DGFunction
    t: float
    steps: int
    reports: list = field(default_factory=list)


def step_count_and_sizes(T: float, k_of: Callable[[], float]):
    """Helper for loops landing exactly on ``T``; yields step sizes lazily."""
    t = 0.0
    while T - t > 1e-12 * max(1.0, T):
        k = min(k_of(), T - t)
        yield k
        t += k


def run_simulation(
    u0: Callable | DGFunction,
    v0: Callable | DGFunction,
    T: float,
    time_step,
    config: GDConfig | None = None,
    limiter=None,
    *,
    space: DGSpace | None = None,
    law: ConstitutiveLaw,
    mu: float = 1.0,
    matrices: SystemMatrices | None = None,
    callback: Callable | None = None,
) -> SimulationResult:
    """March from ``t = 0`` to ``T`` with GD time steps, limiting after each step.

    ``u0``/``v0`` are callables (projected onto ``space``) or DG functions.
    ``time_step`` maps ``(u, law)`` to ``k``; a float is a :class:`FixedRatio`.
    ``limiter`` is a :class:`~elastodg.limiters.LimiterConfig` or ``None``.
    """
    from elastodg.limiters import apply_limiter

    if T < 0:
        raise InvalidArgument("final time must be non-negative")
    config = config or GDConfig()
    if isinstance(time_step, (int, float)):
        time_step = FixedRatio(float(time_step))
    u = u0.copy() if isinstance(u0, DGFunction) else project_l2(u0, space)
    space = u.space
    v = v0.copy() if isinstance(v0, DGFunction) else project_l2(v0, space)
    if matrices is None:
        matrices = assemble_matrices(space, mu)
    result = SimulationResult(u, v, u.copy(), v.copy(), 0.0, 0)
    lam_next = None
    t = 0.0
    for k in step_count_and_sizes(T, lambda: time_step(u, law)):
        u, v, rep = solve_time_step(u, v, k, config, matrices, law, lambda_start=lam_next)
        if config.warm_start:
            lam_next = rep.final_lambda
        if limiter is not None:
            u, v = apply_limiter(u, v, law, limiter)
        t += k
        result.reports.append(rep)
        result.steps += 1
        if callback is not None:
            callback(t, u, v, rep)
    result.u, result.v, result.t = u, v, (T if result.steps else 0.0)
    return result
