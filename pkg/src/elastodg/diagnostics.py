"""Error norms, convergence rates, total variation and GD iteration statistics."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from elastodg.errors import InvalidArgument
from elastodg.mesh import DGFunction


@dataclass
class ErrorReport:
    l2_u: float
    linf_u: float
    l2_v: float
    linf_v: float
    rates: dict | None = None


@dataclass
class TVReport:
    tv_u: float
    tv_v: float
    # variation of the cell means, the measure used for the TV comparison tables
    tv_u_means: float = math.nan
    tv_v_means: float = math.nan


def _errors_one(f: DGFunction, ref_nodes, ref_ifaces):
    sp = f.space
    d = f.at_nodes() - ref_nodes
    l2 = math.sqrt(sp.integrate(d * d))
    # interface values: left limit from cell i, right limit from cell i+1
    r_right = ref_ifaces[1:]
    r_left = ref_ifaces[:-1]
    trace_err = max(
        np.max(np.abs(f.right_traces - r_right)),
        np.max(np.abs(f.left_traces - r_left)),
    )
    linf = max(float(np.max(np.abs(d))), float(trace_err))
    return l2, linf


def error_norms(u: DGFunction, v: DGFunction, reference) -> ErrorReport:
    """L2 (by quadrature) and max-norm (nodes and traces) errors against samples.

    ``reference`` must provide ``lookup(points) -> (u, v)``, e.g.
    :class:`elastodg.rkdg.ReferenceSolution`; missing samples raise
    :class:`InvalidArgument`.
    """
    sp = u.space
    xn = sp.node_coordinates
    un, vn = reference.lookup(xn)
    ui, vi = reference.lookup(sp.mesh.interfaces)
    l2u, liu = _errors_one(u, un, ui)
    l2v, liv = _errors_one(v, vn, vi)
    return ErrorReport(l2u, liu, l2v, liv)


def convergence_rate(e_coarse: float, e_fine: float, ratio: float = 2.0) -> float:
    """``log_ratio(e_coarse / e_fine)``; NaN (undefined) if either error is zero."""
    if e_coarse <= 0 or e_fine <= 0 or ratio == 1.0:
        return math.nan
    return math.log(e_coarse / e_fine) / math.log(ratio)


def convergence_rates(Ns, errors):
    """Rates between consecutive entries; the first entry gets ``None``."""
    out = [None]
    for (n0, e0), (n1, e1) in zip(zip(Ns, errors), zip(Ns[1:], errors[1:])):
        out.append(convergence_rate(e0, e1, n1 / n0) if n1 != n0 else math.nan)
    return out


def total_variation(f: DGFunction, samples_per_cell: int = 20) -> float:
    """Variation of the piecewise polynomial, with interface jumps (periodic)."""
    if samples_per_cell < 2:
        raise InvalidArgument("samples_per_cell must be >= 2")
    from elastodg.mesh import legendre_table

    xi = np.linspace(-1.0, 1.0, samples_per_cell)
    vals = f.coeffs @ legendre_table(f.space.degree, xi)[0]
    inner = np.abs(np.diff(vals, axis=1)).sum()
    jumps = np.abs(np.roll(vals[:, 0], -1) - vals[:, -1]).sum()
    return float(inner + jumps)


def mean_variation(f: DGFunction) -> float:
    """Periodic variation of the sequence of cell means."""
    m = f.means
    return float(np.abs(np.roll(m, -1) - m).sum())


def tv_report(u: DGFunction, v: DGFunction, samples_per_cell: int = 20) -> TVReport:
    return TVReport(
        total_variation(u, samples_per_cell),
        total_variation(v, samples_per_cell),
        mean_variation(u),
        mean_variation(v),
    )


def iteration_stats(reports) -> dict:
    if not reports:
        raise InvalidArgument("no step reports")
    its = np.array([r.iterations for r in reports], dtype=float)
    return {
        "steps": len(reports),
        "avg_iterations": float(its.mean()),
        "max_iterations": int(its.max()),
        "rejected_steps": int(sum(r.rejected_steps for r in reports)),
        "capped_steps": int(sum(r.converged_by == "max-iterations" for r in reports)),
    }
