import math

import numpy as np
import pytest

from elastodg import InvalidArgument, NumericalError, cubic_law, linear_law, project_l2
from elastodg.diagnostics import mean_variation
from elastodg.limiters import LimiterConfig
from elastodg.mesh import DGFunction
from elastodg.problems import riemann_u0, riemann_v0
from elastodg.rkdg import (
    ReferenceSolution,
    RKDGConfig,
    generate_reference,
    run_rkdg,
    sample_points,
    semidiscrete_rhs,
    step_euler,
    step_tvd_rk3,
)

from helpers import make_space


def test_config_validation():
    with pytest.raises(InvalidArgument):
        RKDGConfig("rk4")
    with pytest.raises(InvalidArgument):
        RKDGConfig("euler", 0.0)


@pytest.mark.parametrize("K", [0, 1, 3])
def test_constant_state_has_zero_rhs(K, cubic):
    sp = make_space(10, K)
    u = project_l2(lambda x: 0 * x + 1.7, sp)
    v = project_l2(lambda x: 0 * x - 0.3, sp)
    du, dv = semidiscrete_rhs(u, v, cubic)
    assert np.abs(du).max() <= 1e-11 and np.abs(dv).max() <= 1e-11
    for step in (step_euler, step_tvd_rk3):
        un, vn = step(u, v, 0.01, cubic)
        np.testing.assert_allclose(un.coeffs, u.coeffs, atol=1e-14)
        np.testing.assert_allclose(vn.coeffs, v.coeffs, atol=1e-14)


def test_means_have_zero_derivative(cubic, rng):
    sp = make_space(16, 2)
    u = DGFunction(sp, rng.normal(size=(16, 3)))
    v = DGFunction(sp, rng.normal(size=(16, 3)))
    du, dv = semidiscrete_rhs(u, v, cubic)
    h = sp.mesh.cell_lengths
    assert abs(np.sum(du[:, 0] * h)) <= 1e-13
    assert abs(np.sum(dv[:, 0] * h)) <= 1e-13


@pytest.mark.parametrize("K", [1, 2])
def test_linear_wave_operator(K, linear):
    """For sigma(u) = u: d/dt (u, v) = (v_x, u_x), checked on one Fourier mode.

    The coefficient-level truncation error of the DG derivative is O(h^K);
    the extra order of the global error comes from cancellation in time.
    """
    errs = []
    for N in (32, 64):
        sp = make_space(N, K)
        kx = 2 * math.pi / 8
        u = project_l2(lambda x: np.sin(kx * x), sp)
        v = project_l2(lambda x: np.cos(kx * x), sp)
        du, dv = semidiscrete_rhs(u, v, linear)
        ex_du = project_l2(lambda x: -kx * np.sin(kx * x), sp).coeffs
        ex_dv = project_l2(lambda x: kx * np.cos(kx * x), sp).coeffs
        M = sp.mass_diag
        errs.append(math.sqrt(np.sum(M * ((du - ex_du) ** 2 + (dv - ex_dv) ** 2))))
    assert abs(math.log2(errs[0] / errs[1]) - K) < 0.15


def test_rk3_global_order(linear):
    """Smooth standing wave: u = sin(kx) cos(kt), v = cos(kx) sin(kt)."""
    kx, T, K = 2 * math.pi / 8, 0.5, 2
    errs = []
    for N in (10, 20, 40):
        sp = make_space(N, K)
        u, v, _ = run_rkdg(
            lambda x: np.sin(kx * x), lambda x: 0 * x, T, RKDGConfig("tvd_rk3", 0.1), space=sp, law=linear
        )
        xq = sp.node_coordinates
        du = u.at_nodes() - np.sin(kx * xq) * math.cos(kx * T)
        dv = v.at_nodes() - np.cos(kx * xq) * math.sin(kx * T)
        errs.append(math.sqrt(sp.integrate(du * du + dv * dv)))
    rates = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(np.abs(rates - 3.0) < 0.3), rates


def test_run_keeps_means(cubic):
    sp = make_space(40, 1)
    u0, v0 = project_l2(riemann_u0, sp), project_l2(riemann_v0, sp)
    h = sp.mesh.cell_lengths
    drift = []

    def cb(t, u, v):
        drift.append(abs(np.sum((u.coeffs[:, 0] - u0.coeffs[:, 0]) * h)))
        drift.append(abs(np.sum((v.coeffs[:, 0] - v0.coeffs[:, 0]) * h)))

    run_rkdg(u0, v0, 0.1, RKDGConfig("tvd_rk3", 1 / 12, LimiterConfig("minmod")), law=cubic, callback=cb)
    assert max(drift) <= 1e-12


def test_characteristic_tv_of_means_nonincreasing_linear(linear):
    """TVD in the means holds field by field once the characteristic fields decouple."""
    sp = make_space(80, 1)
    u0 = project_l2(riemann_u0, sp)
    v0 = project_l2(lambda x: np.where((x >= 1) & (x <= 2.5), 0.5, 0.0), sp)
    hist = []

    def cb(t, u, v):
        hist.append([mean_variation(DGFunction(sp, u.coeffs + s * v.coeffs)) for s in (1, -1)])

    cfg = RKDGConfig("tvd_rk3", 1 / 12, LimiterConfig("minmod"))
    run_rkdg(u0, v0, 1.0, cfg, law=linear, callback=cb)
    assert np.diff(np.array(hist), axis=0).max() <= 1e-10


def test_limited_rk3_tv_stays_near_exact(cubic):
    """For the nonlinear system TV(u) of the means may grow slightly but stays near 2."""
    sp = make_space(80, 1)
    cfg = RKDGConfig("tvd_rk3", 1 / 12, LimiterConfig("minmod"))
    u, _, _ = run_rkdg(riemann_u0, riemann_v0, 0.25, cfg, space=sp, law=cubic)
    assert mean_variation(u) < 2.01


def test_table2_baseline_columns(cubic):
    sp = make_space(160, 1)
    u, v, _ = run_rkdg(riemann_u0, riemann_v0, 0.25, RKDGConfig("euler", 1 / 12), space=sp, law=cubic)
    assert mean_variation(u) == pytest.approx(3.443, rel=0.02)
    assert mean_variation(v) == pytest.approx(9.657, rel=0.02)
    u, v, _ = run_rkdg(riemann_u0, riemann_v0, 0.25, RKDGConfig("tvd_rk3", 1 / 12), space=sp, law=cubic)
    assert mean_variation(u) == pytest.approx(2.529, rel=0.02)


def test_blow_up_is_numerical_error(cubic):
    sp = make_space(40, 1)
    with np.errstate(all="ignore"), pytest.raises(NumericalError):
        run_rkdg(riemann_u0, riemann_v0, 5.0, RKDGConfig("euler", 2.0), space=sp, law=cubic)


# ---------------------------------------------------------------- reference solutions


def test_constant_reference(cubic):
    ref = generate_reference(
        lambda x: 0 * x + 1.0, lambda x: 0 * x + 2.0, 0.05, cubic, x_left=0, x_right=8, N=32, K=2
    )
    np.testing.assert_allclose(ref.u, 1.0, atol=1e-13)
    np.testing.assert_allclose(ref.v, 2.0, atol=1e-13)


def test_reference_roundtrip_and_lookup(tmp_path, cubic):
    coarse = make_space(10, 1)
    pts = sample_points(coarse)
    ref = generate_reference(riemann_u0, riemann_v0, 0.01, cubic, x_left=0, x_right=8, N=40, K=2, points=pts)
    path = tmp_path / "ref.dat"
    ref.save(path)
    back = ReferenceSolution.load(path)
    np.testing.assert_array_equal(back.x, ref.x)
    np.testing.assert_array_equal(back.u, ref.u)
    assert back.t == 0.01 and back.meta["N"] == "40"
    u, v = back.lookup(coarse.node_coordinates)
    assert u.shape == coarse.node_coordinates.shape
    with pytest.raises(InvalidArgument):
        back.lookup(np.array([0.123456]))


def test_reference_self_convergence(cubic):
    from elastodg.problems import smooth_u0, smooth_v0

    pts = sample_points(make_space(20, 1))
    kw = dict(x_left=0, x_right=8, K=3, cfl=0.05, points=pts)
    a = generate_reference(smooth_u0, smooth_v0, 0.025, cubic, N=320, **kw)
    b = generate_reference(smooth_u0, smooth_v0, 0.025, cubic, N=640, **kw)
    assert np.abs(a.u - b.u).max() < 1e-6 and np.abs(a.v - b.v).max() < 1e-6
