"""Local Lax-Friedrichs interface fluxes for ``f(U) = (-v, -sigma(u))``."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from elastodg.constitutive import ConstitutiveLaw, _checked_speed


@dataclass(frozen=True)
class InterfaceState:
    u_minus: np.ndarray
    u_plus: np.ndarray
    v_minus: np.ndarray
    v_plus: np.ndarray


def llf_alpha(law: ConstitutiveLaw, u_minus, u_plus):
    """Largest characteristic speed over the bracket between the two u-traces."""
    a = law.max_sigma_prime_between(np.asarray(u_minus, float), np.asarray(u_plus, float))
    s = _checked_speed(a)
    return float(s) if np.ndim(s) == 0 else s


def llf_v_hat(law: ConstitutiveLaw, s: InterfaceState, alpha=None):
    """Numerical trace of ``v``: ``(v+ + v- - alpha (u+ - u-)) / 2``."""
    if alpha is None:
        alpha = llf_alpha(law, s.u_minus, s.u_plus)
    return 0.5 * (s.v_plus + s.v_minus - alpha * (s.u_plus - s.u_minus))


def dissipative_v_hat(law: ConstitutiveLaw, s: InterfaceState, alpha=None):
    """``(v+ + v- + alpha (u+ - u-)) / 2``, i.e. minus the u-component of
    :func:`llf_system_flux`.

    This is the trace the variational solver uses: with ``f = (-v, -sigma)``
    the sign in :func:`llf_v_hat` adds anti-diffusion and the GD iteration
    does not settle.
    """
    if alpha is None:
        alpha = llf_alpha(law, s.u_minus, s.u_plus)
    return 0.5 * (s.v_plus + s.v_minus + alpha * (s.u_plus - s.u_minus))


def physical_flux(law: ConstitutiveLaw, u, v):
    return -np.asarray(v, dtype=float), -law.sigma(np.asarray(u, dtype=float))


def llf_system_flux(law: ConstitutiveLaw, s: InterfaceState, alpha=None):
    """Both components of ``(f(U-) + f(U+) - alpha (U+ - U-)) / 2``."""
    if alpha is None:
        alpha = llf_alpha(law, s.u_minus, s.u_plus)
    fm_u, fm_v = physical_flux(law, s.u_minus, s.v_minus)
    fp_u, fp_v = physical_flux(law, s.u_plus, s.v_plus)
    fu = 0.5 * (fm_u + fp_u - alpha * (s.u_plus - s.u_minus))
    fv = 0.5 * (fm_v + fp_v - alpha * (s.v_plus - s.v_minus))
    return fu, fv
