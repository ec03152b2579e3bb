"""Post-step slope limiters for the (u, v) pair.

Both limiters work cell by cell on a snapshot of the unlimited data and,
by default, in characteristic variables linearized at the cell-mean strain.
Cell means are never modified, and cells the limiter leaves alone keep their
coefficients bit for bit.

The moments limiter compares ``(2l+1) c_{l+1}`` with neighbour differences of
``c_l``, from the top degree downwards, and stops at the first level that is
not modified. Other moment-limiter variants use a different scaling factor;
this scaling is deliberate.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from elastodg.constitutive import ConstitutiveLaw, characteristic_matrices
from elastodg.errors import InvalidArgument, UnsupportedConfiguration
from elastodg.mesh import DGFunction

KINDS = ("none", "minmod", "moments", "auto")


@dataclass(frozen=True)
class LimiterConfig:
    kind: str = "none"
    tvb_M: float = 0.0
    characteristic: bool = True

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgument(f"unknown limiter kind {self.kind!r}")
        if self.tvb_M < 0:
            raise InvalidArgument("tvb_M must be non-negative")


def _minmod(a1, a2, a3, threshold=0.0):
    """Modified minmod; also returns the mask of entries where ``a1`` is kept."""
    a1, a2, a3 = np.broadcast_arrays(*(np.asarray(a, dtype=float) for a in (a1, a2, a3)))
    s = np.sign(a1)
    same = (s == np.sign(a2)) & (s == np.sign(a3)) & (s != 0)
    mag = np.minimum(np.abs(a1), np.minimum(np.abs(a2), np.abs(a3)))
    out = np.where(same, s * mag, 0.0)
    keep = (np.abs(a1) <= threshold) | (same & (np.abs(a1) <= mag)) | (a1 == 0)
    out = np.where(keep, a1, out)
    return out, keep


def minmod(a1, a2, a3, tvb_M: float = 0.0, h: float = 0.0):
    """``a1`` if ``|a1| <= M h^2``; else the smallest-magnitude argument if all
    three share a sign; else 0."""
    out, _ = _minmod(a1, a2, a3, tvb_M * h * h)
    return float(out) if np.ndim(out) == 0 else out


def _stack(u: DGFunction, v: DGFunction) -> np.ndarray:
    return np.stack([u.coeffs, v.coeffs], axis=-1)  # (N, K+1, 2)


def _to_local(U, L):
    """Per-cell characteristic data of the cell and of its two neighbours."""
    own = np.einsum("iab,ilb->ila", L, U)
    right = np.einsum("iab,ilb->ila", L, np.roll(U, -1, axis=0))
    left = np.einsum("iab,ilb->ila", L, np.roll(U, 1, axis=0))
    return own, right, left


def _prepare(u: DGFunction, v: DGFunction, law, config: LimiterConfig):
    U = _stack(u, v)
    N = U.shape[0]
    if config.characteristic:
        L, R = characteristic_matrices(law, U[:, 0, 0])
    else:
        L = R = np.broadcast_to(np.eye(2), (N, 2, 2))
    return U, L, R


def _finish(u, v, U, W_new, changed, R):
    """Map limited characteristic data back in modified cells only."""
    out = U.copy()
    if np.any(changed):
        back = np.einsum("iab,ilb->ila", R[changed], W_new[changed])
        out[changed, 1:, :] = back[:, 1:, :]
    return (
        DGFunction(u.space, out[:, :, 0]),
        DGFunction(v.space, out[:, :, 1]),
    )


def limit_minmod(u: DGFunction, v: DGFunction, law: ConstitutiveLaw, config: LimiterConfig):
    K = u.space.degree
    if K > 2:
        raise UnsupportedConfiguration("minmod limiter supports degree <= 2 only")
    if K == 0:
        return u.copy(), v.copy()
    U, L, R = _prepare(u, v, law, config)
    W, Wr, Wl = _to_local(U, L)
    h = u.space.mesh.cell_lengths[:, None]
    thr = config.tvb_M * h * h
    sgn = u.space.signs
    tilde = W[:, 1:, :].sum(axis=1)
    dtilde = -np.einsum("l,ila->ia", sgn[1:], W[:, 1:, :])
    dp = Wr[:, 0, :] - W[:, 0, :]
    dm = W[:, 0, :] - Wl[:, 0, :]
    t_mod, keep_t = _minmod(tilde, dp, dm, thr)
    d_mod, keep_d = _minmod(dtilde, dp, dm, thr)
    changed = ~(keep_t & keep_d).all(axis=1)
    W_new = W.copy()
    if K == 1:
        W_new[:, 1, :] = t_mod
    else:
        W_new[:, 1, :] = 0.5 * (t_mod + d_mod)
        W_new[:, 2, :] = 0.5 * (t_mod - d_mod)
    return _finish(u, v, U, W_new, changed, R)


def limit_moments(u: DGFunction, v: DGFunction, law: ConstitutiveLaw, config: LimiterConfig):
    K = u.space.degree
    if K == 0:
        return u.copy(), v.copy()
    U, L, R = _prepare(u, v, law, config)
    W, Wr, Wl = _to_local(U, L)
    h = u.space.mesh.cell_lengths[:, None]
    thr = config.tvb_M * h * h
    W_new = W.copy()
    active = np.ones(W.shape[0::2], dtype=bool)  # (N, 2): still descending
    changed = np.zeros(W.shape[0], dtype=bool)
    for l in range(K - 1, -1, -1):
        f = 2 * l + 1
        a1 = f * W[:, l + 1, :]
        lim, keep = _minmod(a1, Wr[:, l, :] - W[:, l, :], W[:, l, :] - Wl[:, l, :], thr)
        modify = active & ~keep
        W_new[:, l + 1, :] = np.where(modify, lim / f, W_new[:, l + 1, :])
        changed |= modify.any(axis=1)
        active &= ~keep
        if not active.any():
            break
    return _finish(u, v, U, W_new, changed, R)


def apply_limiter(u: DGFunction, v: DGFunction, law: ConstitutiveLaw, config: LimiterConfig | None):
    if config is None or config.kind == "none":
        return u, v
    kind = config.kind
    if kind == "auto":
        kind = "minmod" if u.space.degree <= 2 else "moments"
    if kind == "minmod":
        return limit_minmod(u, v, law, config)
    return limit_moments(u, v, law, config)
