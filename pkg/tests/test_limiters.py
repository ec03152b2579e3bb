import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from elastodg import InvalidArgument, UnsupportedConfiguration, cubic_law, project_l2
from elastodg.limiters import LimiterConfig, apply_limiter, limit_minmod, limit_moments, minmod
from elastodg.mesh import DGFunction

from helpers import make_space

LAW = cubic_law()


def _pair(sp, C, D):
    return DGFunction(sp, np.asarray(C, float)), DGFunction(sp, np.asarray(D, float))


def _random_pair(seed, N, K):
    g = np.random.default_rng(seed)
    C = 0.5 * g.normal(size=(N, K + 1))
    C[:, 0] += 1.0
    return _pair(make_space(N, K), C, g.normal(size=(N, K + 1)))


# ---------------------------------------------------------------- minmod function


def test_minmod_examples():
    assert minmod(1, 2, 3) == 1
    assert minmod(1, -2, 3) == 0
    assert minmod(-3, -1, -2) == -1
    assert minmod(0, 5, 5) == 0


def test_minmod_tvb_threshold():
    # |a1| <= M h^2 keeps a1 even with mixed signs
    assert minmod(0.05, -1, 1, tvb_M=10.0, h=0.1) == 0.05
    assert minmod(0.5, -1, 1, tvb_M=10.0, h=0.1) == 0


def test_config_validation():
    with pytest.raises(InvalidArgument):
        LimiterConfig("weno")
    with pytest.raises(InvalidArgument):
        LimiterConfig("minmod", tvb_M=-1)


# ---------------------------------------------------------------- minmod limiter


@pytest.mark.parametrize("K", [1, 2])
def test_smooth_monotone_data_untouched(K):
    sp = make_space(20, K)
    u = project_l2(lambda x: 1.0 + 0.1 * x, sp)
    v = project_l2(lambda x: -0.05 * x, sp)
    # generous TVB constant: no cell is modified, coefficients bit for bit
    lu, lv = limit_minmod(u, v, LAW, LimiterConfig("minmod", tvb_M=1e6))
    np.testing.assert_array_equal(lu.coeffs, u.coeffs)
    np.testing.assert_array_equal(lv.coeffs, v.coeffs)


@pytest.mark.parametrize("characteristic", [True, False])
def test_isolated_extremum_slope_zeroed(characteristic):
    sp = make_space(6, 1)
    C = np.array([[1, 0], [1, 0], [2, 0.5], [1, 0], [1, 0], [1, 0]], float)
    D = np.zeros_like(C)
    lu, lv = limit_minmod(*_pair(sp, C, D), LAW, LimiterConfig("minmod", characteristic=characteristic))
    assert lu.coeffs[2, 1] == pytest.approx(0.0, abs=1e-15)
    np.testing.assert_allclose(lv.coeffs[:, 1], 0.0, atol=1e-15)
    np.testing.assert_array_equal(lu.coeffs[:, 0], C[:, 0])


def test_quadratic_rebuild_matches_endpoint_deviations():
    sp = make_space(5, 2)
    C = np.array([[0, 0, 0], [1, 0.9, 0.3], [2, 0, 0], [3, 0, 0], [4, 0, 0]], float)
    lu, _ = limit_minmod(*_pair(sp, C, np.zeros_like(C)), LAW, LimiterConfig("minmod", characteristic=False))
    c = lu.coeffs[1]
    # endpoint deviations limited against neighbour mean differences (1 and 1)
    assert c.sum() - c[0] == pytest.approx(1.0)  # min(1.2, 1, 1)
    assert c[0] - (c[0] - c[1] + c[2]) == pytest.approx(0.6)  # 0.9 - 0.3 kept
    assert c[0] == 1.0


def test_minmod_rejects_high_degree():
    sp = make_space(6, 3)
    with pytest.raises(UnsupportedConfiguration):
        limit_minmod(sp.zeros(), sp.zeros(), LAW, LimiterConfig("minmod"))


def test_auto_selects_by_degree():
    u, v = _random_pair(3, 10, 3)
    a = apply_limiter(u, v, LAW, LimiterConfig("auto"))
    b = limit_moments(u, v, LAW, LimiterConfig("moments"))
    np.testing.assert_array_equal(a[0].coeffs, b[0].coeffs)
    u, v = _random_pair(3, 10, 2)
    a = apply_limiter(u, v, LAW, LimiterConfig("auto"))
    b = limit_minmod(u, v, LAW, LimiterConfig("minmod"))
    np.testing.assert_array_equal(a[1].coeffs, b[1].coeffs)


def test_none_is_identity():
    u, v = _random_pair(4, 8, 1)
    assert apply_limiter(u, v, LAW, LimiterConfig()) == (u, v)
    assert apply_limiter(u, v, LAW, None) == (u, v)


# ---------------------------------------------------------------- moments limiter


def test_moments_identity_when_relations_hold():
    sp = make_space(10, 3)
    i = np.arange(10.0)
    # every level satisfies (2l+1)|c_{l+1}| <= neighbour differences of c_l
    C = np.column_stack([1.0 + i, 0.2 + 0.05 * i, 0.01 + 0.002 * i, np.full(10, 1e-4)])
    u, v = _pair(sp, C, -0.5 * C)
    lu, lv = limit_moments(u, v, LAW, LimiterConfig("moments", characteristic=False))
    # the periodic wrap puts a jump between the end cells; interior cells hold
    np.testing.assert_array_equal(lu.coeffs[1:-1], C[1:-1])
    np.testing.assert_array_equal(lv.coeffs[1:-1], -0.5 * C[1:-1])


def test_moments_spike_in_top_coefficient_only():
    sp = make_space(6, 3)
    C = np.zeros((6, 4))
    C[:, 0] = np.arange(6.0)
    C[:, 1] = 0.2 + 0.05 * np.arange(6.0)
    C[:, 2] = 0.01
    C[3, 3] = 5.0
    lu, _ = limit_moments(*_pair(sp, C, np.zeros_like(C)), LAW, LimiterConfig("moments", characteristic=False))
    expect = C.copy()
    expect[3, 3] = 0.0  # level-2 neighbour differences vanish
    np.testing.assert_allclose(lu.coeffs, expect, atol=1e-15)
    # lower levels untouched: the loop stopped at the unchanged level
    np.testing.assert_array_equal(lu.coeffs[:, :3], C[:, :3])


# ---------------------------------------------------------------- invariants

kinds = st.sampled_from(
    [("minmod", 1), ("minmod", 2), ("moments", 1), ("moments", 2), ("moments", 3), ("auto", 3)]
)


@given(kinds, st.booleans(), st.floats(0, 5), st.integers(0, 2**31))
def test_means_never_change(kind_K, char, M, seed):
    kind, K = kind_K
    u, v = _random_pair(seed, 9, K)
    lu, lv = apply_limiter(u, v, LAW, LimiterConfig(kind, M, char))
    np.testing.assert_array_equal(lu.coeffs[:, 0], u.coeffs[:, 0])
    np.testing.assert_array_equal(lv.coeffs[:, 0], v.coeffs[:, 0])


@given(kinds, st.booleans(), st.integers(0, 2**31))
def test_unlimited_cells_bit_identical(kind_K, char, seed):
    kind, K = kind_K
    u, v = _random_pair(seed, 9, K)
    lu, lv = apply_limiter(u, v, LAW, LimiterConfig(kind, 0.0, char))
    same_u = np.all(lu.coeffs == u.coeffs, axis=1)
    same_v = np.all(lv.coeffs == v.coeffs, axis=1)
    # a cell is either untouched in both fields or was modified by the limiter
    changed = ~(same_u & same_v)
    for i in np.flatnonzero(~changed):
        assert np.array_equal(lu.coeffs[i], u.coeffs[i])


@given(
    st.sampled_from([("minmod", 1), ("minmod", 2), ("moments", 1), ("auto", 2)]),
    st.booleans(),
    st.floats(0, 5),
    st.integers(0, 2**31),
)
def test_idempotent(kind_K, char, M, seed):
    kind, K = kind_K
    cfg = LimiterConfig(kind, M, char)
    u1, v1 = apply_limiter(*_random_pair(seed, 11, K), LAW, cfg)
    u2, v2 = apply_limiter(u1, v1, LAW, cfg)
    np.testing.assert_allclose(u2.coeffs, u1.coeffs, rtol=0, atol=1e-12)
    np.testing.assert_allclose(v2.coeffs, v1.coeffs, rtol=0, atol=1e-12)


@given(st.booleans(), st.integers(0, 2**31))
def test_minmod_limited_slopes_bounded_by_mean_differences(char, seed):
    u, v = _random_pair(seed, 10, 1)
    lu, lv = limit_minmod(u, v, LAW, LimiterConfig("minmod", 0.0, False))
    for f in (lu, lv):
        m = f.means
        bound = np.minimum(np.abs(np.roll(m, -1) - m), np.abs(m - np.roll(m, 1)))
        assert np.all(np.abs(f.coeffs[:, 1]) <= bound + 1e-14)
