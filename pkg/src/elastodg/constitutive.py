"""Stress laws and the characteristic eigenstructure of the p-system.

The p-system ``u_t - v_x = 0, v_t - sigma(u)_x = 0`` is written as
``U_t + f(U)_x = 0`` with ``U = (u, v)`` and ``f(U) = (-v, -sigma(u))``, so the
flux Jacobian is ``[[0, -1], [-sigma'(u), 0]]`` with eigenvalues ``+-s``,
``s = sqrt(sigma'(u))``.

:class:`Eigenstructure` keeps the matrices ``l`` and ``r`` in the
following layout::

    l = 1/2 [[1/s, -1/s], [1, 1]],    r = [[s, 1], [-s, 1]],    l @ r = I.

In that layout the *rows* of ``r`` are right eigenvectors of the Jacobian
for the state ordered ``(v, u)``, with eigenvalues ``-s`` and ``+s``. For data
ordered ``(u, v)`` the equivalent pair is ``L = l.T @ P`` and ``R = P @ r.T``
where ``P`` swaps the two components; then ``R @ diag(-s, +s) @ L`` is the flux
Jacobian. The limiters use ``L``/``R`` (see :meth:`Eigenstructure.left_uv`).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from elastodg.errors import ConstitutiveViolation

_SWAP = np.array([[0.0, 1.0], [1.0, 0.0]])


@dataclass(frozen=True)
class ConstitutiveLaw:
    name: str
    sigma: Callable
    sigma_prime: Callable
    W: Callable
    # max of sigma' over [min(a,b), max(a,b)]; sampled when not given
    max_sigma_prime: Callable | None = None

    def max_sigma_prime_between(self, a, b):
        if self.max_sigma_prime is not None:
            return self.max_sigma_prime(a, b)
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        t = np.linspace(0.0, 1.0, 33)
        pts = a[..., None] + (b - a)[..., None] * t
        return np.max(self.sigma_prime(pts), axis=-1)


def cubic_law() -> ConstitutiveLaw:
    """``sigma(u) = u^3 + u`` with ``W(u) = u^4/4 + u^2/2``."""
    return ConstitutiveLaw(
        name="cubic",
        sigma=lambda u: u**3 + u,
        sigma_prime=lambda u: 3.0 * u**2 + 1.0,
        W=lambda u: 0.25 * u**4 + 0.5 * u**2,
        # sigma' is even and increasing in |u|
        max_sigma_prime=lambda a, b: 3.0 * np.maximum(np.square(a), np.square(b)) + 1.0,
    )


def linear_law() -> ConstitutiveLaw:
    """``sigma(u) = u``: the linear wave system."""
    return ConstitutiveLaw(
        name="linear",
        sigma=lambda u: 1.0 * u,
        sigma_prime=lambda u: np.ones_like(np.asarray(u, dtype=float)),
        W=lambda u: 0.5 * u**2,
        max_sigma_prime=lambda a, b: np.ones(np.broadcast(np.asarray(a), np.asarray(b)).shape),
    )


LAWS = {"cubic": cubic_law, "linear": linear_law}


def get_law(name: str) -> ConstitutiveLaw:
    try:
        return LAWS[name]()
    except KeyError:
        raise ValueError(f"unknown constitutive law {name!r}") from None


def _checked_speed(sp):
    sp = np.asarray(sp, dtype=float)
    if np.any(~(sp > 0)):
        raise ConstitutiveViolation("sigma'(u) <= 0: stress law not strictly increasing")
    return np.sqrt(sp)


def wave_speed(law: ConstitutiveLaw, u):
    """Characteristic speed ``sqrt(sigma'(u))``."""
    s = _checked_speed(law.sigma_prime(np.asarray(u, dtype=float)))
    return float(s) if s.ndim == 0 else s


@dataclass(frozen=True)
class Eigenstructure:
    speed: float
    eigenvalues: np.ndarray
    l: np.ndarray
    r: np.ndarray

    def left_uv(self) -> np.ndarray:
        """Left eigenvector matrix for ``(u, v)``-ordered data."""
        return self.l.T @ _SWAP

    def right_uv(self) -> np.ndarray:
        """Right eigenvector matrix (columns) for ``(u, v)``-ordered data."""
        return _SWAP @ self.r.T


def eigenstructure(law: ConstitutiveLaw, u: float) -> Eigenstructure:
    s = float(_checked_speed(law.sigma_prime(float(u))))
    l = 0.5 * np.array([[1.0 / s, -1.0 / s], [1.0, 1.0]])
    r = np.array([[s, 1.0], [-s, 1.0]])
    return Eigenstructure(s, np.array([s, -s]), l, r)


def characteristic_matrices(law: ConstitutiveLaw, u: np.ndarray):
    """Vectorized ``(L, R)`` for ``(u, v)`` data at states ``u`` (shape ``(n, 2, 2)``).

    ``L = 1/2 [[1, 1/s], [1, -1/s]]`` and ``R = [[1, 1], [s, -s]]``.
    """
    s = _checked_speed(law.sigma_prime(np.asarray(u, dtype=float)))
    s = np.atleast_1d(s)
    L = np.empty(s.shape + (2, 2))
    L[..., 0, 0] = 0.5
    L[..., 0, 1] = 0.5 / s
    L[..., 1, 0] = 0.5
    L[..., 1, 1] = -0.5 / s
    R = np.empty_like(L)
    R[..., 0, 0] = 1.0
    R[..., 0, 1] = 1.0
    R[..., 1, 0] = s
    R[..., 1, 1] = -s
    return L, R
