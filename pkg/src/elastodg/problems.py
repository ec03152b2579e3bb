"""Initial data of the two benchmark problems (both on the periodic interval [0, 8])."""
import numpy as np

DOMAIN = (0.0, 8.0)


def smooth_u0(x):
    return 2.0 - np.exp(-0.5 * (x - 4.0) ** 4)


def smooth_v0(x):
    """Exact derivative of :func:`smooth_u0`."""
    return 2.0 * (x - 4.0) ** 3 * np.exp(-0.5 * (x - 4.0) ** 4)


def riemann_u0(x):
    x = np.asarray(x, dtype=float)
    return np.where((x >= 4.0) & (x <= 6.0), 1.0, 2.0)


def riemann_v0(x):
    return np.full_like(np.asarray(x, dtype=float), 2.0)


PROBLEMS = {
    "smooth": (smooth_u0, smooth_v0),
    "riemann": (riemann_u0, riemann_v0),
}
