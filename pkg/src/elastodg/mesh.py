"""Periodic 1-D mesh, modal Legendre DG space and the constant system matrices.

Coefficient layout: a field on ``N`` cells with degree ``K`` is an ``(N, K+1)``
array; entry ``(i, l)`` multiplies the Legendre polynomial ``P_l`` mapped
affinely onto cell ``i``. Flattened vectors use row-major order, i.e. global
index ``i*(K+1) + l``.

Interfaces are numbered so that interface ``i`` sits between cell ``i`` and
cell ``(i+1) % N``; interface ``N-1`` is the periodic wrap ``x_right == x_left``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from numpy.polynomial import legendre as npleg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from elastodg.errors import InvalidArgument, NumericalError


@dataclass(frozen=True, eq=False)
class Mesh:
    interfaces: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.interfaces, dtype=float)
        if x.ndim != 1 or x.size < 3:
            raise InvalidArgument("a mesh needs at least two cells")
        if not np.all(np.diff(x) > 0):
            raise InvalidArgument("interfaces must be strictly increasing")
        x.setflags(write=False)
        object.__setattr__(self, "interfaces", x)

    @property
    def x_left(self) -> float:
        return float(self.interfaces[0])

    @property
    def x_right(self) -> float:
        return float(self.interfaces[-1])

    @property
    def length(self) -> float:
        return self.x_right - self.x_left

    @property
    def N(self) -> int:
        return self.interfaces.size - 1

    @cached_property
    def cell_lengths(self) -> np.ndarray:
        return np.diff(self.interfaces)

    @cached_property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.interfaces[1:] + self.interfaces[:-1])

    @property
    def h_min(self) -> float:
        return float(self.cell_lengths.min())

    def right_neighbor(self, i):
        return (np.asarray(i) + 1) % self.N

    def left_neighbor(self, i):
        return (np.asarray(i) - 1) % self.N


def build_mesh(x_left: float, x_right: float, N: int) -> Mesh:
    """Uniform partition of ``[x_left, x_right]`` into ``N`` cells."""
    if int(N) != N or N < 2:
        raise InvalidArgument(f"need N >= 2 cells, got {N!r}")
    if not x_right > x_left:
        raise InvalidArgument("empty interval")
    x = np.linspace(x_left, x_right, int(N) + 1)
    return Mesh(x)


def legendre_eval(degree, xi):
    """Value of the Legendre polynomial ``P_degree`` at reference points ``xi``."""
    xi_arr = np.asarray(xi, dtype=float)
    if degree < 0:
        raise InvalidArgument("degree must be non-negative")
    if np.any(np.abs(xi_arr) > 1.0 + 1e-14):
        raise InvalidArgument("reference coordinate outside [-1, 1]")
    c = np.zeros(degree + 1)
    c[degree] = 1.0
    val = npleg.legval(xi_arr, c)
    return float(val) if np.ndim(val) == 0 else val


def legendre_table(K: int, xi: np.ndarray):
    """Values and xi-derivatives of ``P_0..P_K`` at ``xi``; shapes ``(K+1, len(xi))``."""
    xi = np.atleast_1d(np.asarray(xi, dtype=float))
    vals = np.empty((K + 1, xi.size))
    ders = np.empty((K + 1, xi.size))
    for l in range(K + 1):
        c = np.zeros(K + 1)
        c[l] = 1.0
        vals[l] = npleg.legval(xi, c)
        ders[l] = npleg.legval(xi, npleg.legder(c)) if l > 0 else 0.0
    return vals, ders


@dataclass(frozen=True, eq=False)
class DGSpace:
    """Piecewise polynomials of degree ``degree`` on ``mesh`` (periodic)."""

    mesh: Mesh
    degree: int
    n_quad: int | None = None

    def __post_init__(self):
        if int(self.degree) != self.degree or self.degree < 0:
            raise InvalidArgument("degree must be a non-negative integer")
        nq = self.n_quad if self.n_quad is not None else 2 * self.degree + 1
        object.__setattr__(self, "n_quad", int(nq))

    @property
    def K(self) -> int:
        return self.degree

    @property
    def N(self) -> int:
        return self.mesh.N

    @property
    def n_modes(self) -> int:
        return self.degree + 1

    @property
    def ndof(self) -> int:
        return self.N * self.n_modes

    @cached_property
    def _rule(self):
        return npleg.leggauss(self.n_quad)

    @property
    def quad_nodes(self) -> np.ndarray:
        return self._rule[0]

    @property
    def quad_weights(self) -> np.ndarray:
        return self._rule[1]

    @cached_property
    def basis_at_nodes(self) -> np.ndarray:
        """``(K+1, nq)`` table of ``P_l(xi_q)``."""
        return legendre_table(self.degree, self.quad_nodes)[0]

    @cached_property
    def dbasis_at_nodes(self) -> np.ndarray:
        """``(K+1, nq)`` table of ``P_l'(xi_q)`` (reference derivative)."""
        return legendre_table(self.degree, self.quad_nodes)[1]

    @cached_property
    def node_coordinates(self) -> np.ndarray:
        """Physical quadrature points, shape ``(N, nq)``."""
        m = self.mesh
        return m.centers[:, None] + 0.5 * m.cell_lengths[:, None] * self.quad_nodes[None, :]

    @cached_property
    def signs(self) -> np.ndarray:
        """``(-1)^l`` for ``l = 0..K``: left-endpoint values of the basis."""
        return (-1.0) ** np.arange(self.n_modes)

    @cached_property
    def mass_diag(self) -> np.ndarray:
        """Diagonal of the mass matrix, shape ``(N, K+1)``: ``h_i / (2l+1)``."""
        return self.mesh.cell_lengths[:, None] / (2 * np.arange(self.n_modes) + 1.0)[None, :]

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature of node values ``(N, nq)`` over the whole domain."""
        jac = 0.5 * self.mesh.cell_lengths
        return float(np.sum(jac * (values @ self.quad_weights)))

    def zeros(self) -> "DGFunction":
        return DGFunction(self, np.zeros((self.N, self.n_modes)))


@dataclass(eq=False)
class DGFunction:
    space: DGSpace
    coeffs: np.ndarray = field(repr=False)

    def __post_init__(self):
        c = np.array(self.coeffs, dtype=float)
        shape = (self.space.N, self.space.n_modes)
        if c.shape != shape:
            raise InvalidArgument(f"coefficient array has shape {c.shape}, expected {shape}")
        self.coeffs = c

    def copy(self) -> "DGFunction":
        return DGFunction(self.space, self.coeffs.copy())

    @property
    def means(self) -> np.ndarray:
        return self.coeffs[:, 0]

    @property
    def right_traces(self) -> np.ndarray:
        """Value at the right end of every cell, ``sum_l c_il``."""
        return self.coeffs.sum(axis=1)

    @property
    def left_traces(self) -> np.ndarray:
        """Value at the left end of every cell, ``sum_l c_il (-1)^l``."""
        return self.coeffs @ self.space.signs

    def at_nodes(self) -> np.ndarray:
        """Values at the quadrature points, shape ``(N, nq)``."""
        return self.coeffs @ self.space.basis_at_nodes

    def integral(self) -> float:
        return float(np.sum(self.coeffs[:, 0] * self.space.mesh.cell_lengths))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(self.space.mass_diag * self.coeffs**2)))

    def evaluate(self, x) -> np.ndarray:
        """Point values; points on an interface take the right-cell limit."""
        m = self.space.mesh
        x = np.asarray(x, dtype=float)
        xw = m.x_left + np.mod(x - m.x_left, m.length)
        idx = np.clip(np.searchsorted(m.interfaces, xw, side="right") - 1, 0, m.N - 1)
        xi = np.clip(2.0 * (xw - m.centers[idx]) / m.cell_lengths[idx], -1.0, 1.0)
        vals = legendre_table(self.space.degree, xi.ravel())[0]
        out = np.einsum("lp,pl->p", vals, self.coeffs[idx.ravel()])
        return out.reshape(x.shape)


def project_l2(f, space: DGSpace) -> DGFunction:
    """L2 projection of the callable ``f`` onto ``space`` via quadrature.

    ``f`` must accept a numpy array of points. Coefficient ``(i, l)`` is
    ``(2l+1)/h_i * int_{I_i} f phi_i^l dx``; with the reference-cell Jacobian
    ``h_i/2`` this is ``(2l+1)/2 * sum_q w_q f(x_q) P_l(xi_q)``.
    """
    vals = np.asarray(f(space.node_coordinates), dtype=float)
    vals = np.broadcast_to(vals, space.node_coordinates.shape)
    moments = (vals * space.quad_weights[None, :]) @ space.basis_at_nodes.T
    coeffs = moments * (2 * np.arange(space.n_modes) + 1.0)[None, :] / 2.0
    return DGFunction(space, coeffs)


def trace_values(f: DGFunction):
    """Left and right limits at every interface.

    Returns ``(minus, plus)``, each of length ``N``; ``minus[i]`` is the limit
    from cell ``i`` at its right end, ``plus[i]`` the limit from cell ``i+1``
    (periodically wrapped) at its left end.
    """
    return f.right_traces, np.roll(f.left_traces, -1)


def derivative_coupling(K: int) -> np.ndarray:
    """Per-cell matrix with entries ``A[l, l'] = int phi^l (phi^l')_x dx``.

    Equal to 2 where ``l' = l+1, l+3, ...`` and 0 elsewhere, independent of
    the cell length.
    """
    l = np.arange(K + 1)
    A = np.where((l[None, :] > l[:, None]) & ((l[None, :] + l[:, None]) % 2 == 1), 2.0, 0.0)
    return A


def jump_penalty_matrix(space: DGSpace) -> sp.csr_matrix:
    """Sum over interfaces of ``[[phi_m]] [[phi_n]]`` with ``[[w]] = w^+ - w^-``."""
    N, n = space.N, space.n_modes
    s = space.signs
    rows, cols, vals = [], [], []
    for i in range(N):
        j = (i + 1) % N
        # jump vector at interface i: -1 for every mode of cell i, (-1)^l for cell j
        idx = np.concatenate([i * n + np.arange(n), j * n + np.arange(n)])
        vec = np.concatenate([-np.ones(n), s])
        rows.append(np.repeat(idx, idx.size))
        cols.append(np.tile(idx, idx.size))
        vals.append(np.outer(vec, vec).ravel())
    J = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(N * n, N * n),
    )
    return J.tocsr()


@dataclass(frozen=True, eq=False)
class SystemMatrices:
    """Iterate-independent matrices of the GD velocity update.

    ``M`` is stored as its diagonal (``(N, K+1)``), ``A`` as the single
    per-cell block shared by all cells. ``Kmat = M + (mu/h_min) Jpen`` is
    factored once.
    """

    space: DGSpace
    mu: float
    M: np.ndarray
    A: np.ndarray
    Jpen: sp.csr_matrix
    Kmat: sp.csc_matrix
    _lu: object = field(repr=False)

    @property
    def penalty_scale(self) -> float:
        return self.mu / self.space.mesh.h_min

    def solve_K(self, rhs: np.ndarray) -> np.ndarray:
        """Solve ``Kmat x = rhs`` for an ``(N, K+1)`` right-hand side."""
        rhs = np.reshape(rhs, (self.space.N, self.space.n_modes))
        x = self._lu.solve(rhs.ravel()).reshape(rhs.shape)
        if not np.all(np.isfinite(x)):
            raise NumericalError("linear solve produced non-finite values")
        # Jpen annihilates constants, so the exact solution has sum(M x)[:, 0]
        # equal to sum(rhs[:, 0]); restore it (removes drift of the global mean)
        h = self.space.mesh.cell_lengths
        x[:, 0] += (rhs[:, 0].sum() - (self.M[:, 0] * x[:, 0]).sum()) / h.sum()
        return x

    def dense_M(self) -> np.ndarray:
        return np.diag(self.M.ravel())


def assemble_matrices(space: DGSpace, mu: float = 1.0) -> SystemMatrices:
    if mu < 0:
        raise InvalidArgument("penalty mu must be non-negative")
    M = space.mass_diag.copy()
    A = derivative_coupling(space.degree)
    J = jump_penalty_matrix(space)
    Kmat = (sp.diags(M.ravel()) + (mu / space.mesh.h_min) * J).tocsc()
    try:
        lu = spla.splu(Kmat)
    except RuntimeError as exc:
        raise NumericalError(f"factorization of M + (mu/h) J failed: {exc}") from exc
    return SystemMatrices(space, float(mu), M, A, J, Kmat, lu)
