import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from rkhorizon import bounds, linalg
from rkhorizon.errors import DimensionMismatch, IndexOutOfRank, InconsistentUnderlying, NullSpaceViolation
from rkhorizon.generators import SyntheticSpec, build_synthetic
from rkhorizon.solver import LinearSystem

from conftest import low_rank


@pytest.fixture
def diag_case():
    return LinearSystem([[1.0, 0.0], [0.0, 0.0]], [1.0, 1.0])


def test_frame_hand_case(diag_case):
    f = bounds.make_frame(diag_case, [5.0, 7.0], [1.0, 0.0])
    assert_allclose(f.center, [1.0, 7.0])
    assert_allclose(f.x0_null, [0.0, 7.0])
    assert f.residual_norm == pytest.approx(1.0)


def test_frame_row_space_start(small_system):
    g = np.random.default_rng(0)
    x0 = linalg.project_row_space(small_system.svd, g.standard_normal(15))
    f = bounds.make_frame(small_system, x0, g.standard_normal(15))
    assert np.abs(f.x0_null).max() <= 1e-12
    assert_allclose(f.center, f.x_star_row, atol=1e-12)


def test_frame_full_column_rank():
    g = np.random.default_rng(1)
    sys = LinearSystem(g.standard_normal((8, 3)), g.standard_normal(8))
    f = bounds.make_frame(sys, g.standard_normal(3), g.standard_normal(3))
    assert np.abs(f.x0_null).max() <= 1e-12


def test_frame_dimension_mismatch(diag_case):
    with pytest.raises(DimensionMismatch):
        bounds.make_frame(diag_case, [1.0], [1.0, 0.0])


def test_identity_mse_curve():
    sys = LinearSystem(np.eye(2), [0.0, 0.0])
    f = bounds.make_frame(sys, [1.0, 0.0], [0.0, 0.0])
    c = bounds.mse_bound_curve(sys, f, range(8))
    assert_allclose(c.values, 0.5 ** np.arange(8), rtol=1e-14)
    assert c.horizon == 0.0 and c.kind == "mse"


def test_curves_at_zero(small_system):
    g = np.random.default_rng(2)
    f = bounds.make_frame(small_system, g.standard_normal(15), g.standard_normal(15))
    mse = bounds.mse_bound_curve(small_system, f, [0, 10])
    mean = bounds.mean_bound_curve(small_system, f, [0, 10])
    assert mse.values[0] == pytest.approx(f.initial_gap**2 + mse.horizon)
    assert mean.values[0] == pytest.approx(f.initial_gap + mean.horizon)
    assert mse.horizon == pytest.approx(mean.horizon**2, rel=1e-12)


def test_consistent_lstsq_reference_pure_decay():
    sys = build_synthetic(SyntheticSpec(30, 10, 4, beta=0.0, seed=3))
    f = bounds.make_frame(sys, np.ones(10), sys.x_ls)
    c = bounds.mse_bound_curve(sys, f, [0, 5, 50])
    assert c.horizon <= 1e-20
    q = sys.sigma_min**2 / sys.frob_sq
    assert_allclose(c.values, f.initial_gap**2 * (1 - q) ** np.array([0, 5, 50]), rtol=1e-9, atol=1e-25)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_curves_monotone_toward_horizon(seed):
    g = np.random.default_rng(seed)
    m, n = int(g.integers(2, 12)), int(g.integers(2, 12))
    r = int(g.integers(1, min(m, n) + 1))
    sys = LinearSystem(low_rank(m, n, r, seed), g.standard_normal(m))
    f = bounds.make_frame(sys, g.standard_normal(n), g.standard_normal(n))
    for curve in (bounds.mse_bound_curve(sys, f, range(0, 400, 7)), bounds.mean_bound_curve(sys, f, range(0, 400, 7))):
        v = curve.values
        assert np.all(v >= 0)
        assert np.all(np.diff(v) <= 1e-12 * (1 + v[0]))
        assert np.all(v >= curve.horizon * (1 - 1e-12))


def test_decay_handles_extremes():
    assert bounds.decay(0.5, 0) == 1.0
    assert bounds.decay(1.0, 3) == 0.0
    assert bounds.decay(1e-3, 10**6) == pytest.approx(np.exp(10**6 * np.log1p(-1e-3)))


def test_underlying_reduces_to_consistent_curve():
    sys = build_synthetic(SyntheticSpec(25, 10, 5, beta=0.0, seed=4))
    x0 = np.random.default_rng(0).standard_normal(10)
    c = bounds.underlying_pair_bound(sys, sys.a, sys.b, x0, [0, 3, 30])
    ref = bounds.mse_bound_curve(sys, bounds.make_frame(sys, x0, sys.x_ls), [0, 3, 30])
    assert c.horizon <= 1e-20 and c.kind == "underlying"
    assert_allclose(c.values, ref.values, rtol=1e-10)


def test_underlying_rhs_noise_only():
    sys0 = build_synthetic(SyntheticSpec(25, 10, 5, beta=0.0, seed=5))
    eps = np.random.default_rng(1).standard_normal(25)
    noisy = LinearSystem(sys0.a, sys0.b + eps, factors=sys0.svd)
    c = bounds.underlying_pair_bound(noisy, sys0.a, sys0.b, np.zeros(10), [0, 10])
    assert c.horizon == pytest.approx(np.linalg.norm(eps) ** 2 / sys0.sigma_min**2, rel=1e-10)


def test_underlying_requires_consistency():
    sys = LinearSystem(np.eye(2), [1.0, 1.0])
    with pytest.raises(InconsistentUnderlying):
        bounds.underlying_pair_bound(sys, [[1.0, 0.0], [0.0, 0.0]], [1.0, 1.0], [0.0, 0.0], [0, 1])


def test_singular_coefficient_limits(small_system):
    g = np.random.default_rng(3)
    f = bounds.make_frame(small_system, g.standard_normal(15), g.standard_normal(15))
    u, s, v = small_system.svd.u, small_system.svd.sigma, small_system.svd.v
    for j in (1, 3, 6):
        at0 = bounds.expected_singular_coefficient(small_system, f, j, 0)
        assert at0 == pytest.approx((f.x0_row - f.x_star_row) @ v[:, j - 1], abs=1e-12)
        limit = -(f.residual @ u[:, j - 1]) / s[j - 1]
        assert bounds.expected_singular_coefficient(small_system, f, j, 10**6) == pytest.approx(limit, rel=1e-9)


def test_singular_coefficient_consistent_case():
    sys = build_synthetic(SyntheticSpec(30, 12, 5, beta=0.0, seed=6))
    x0 = linalg.project_row_space(sys.svd, np.random.default_rng(0).standard_normal(12))
    f = bounds.make_frame(sys, x0, sys.x_ls)
    for j in range(1, 6):
        vj, sj = sys.svd.v[:, j - 1], sys.svd.sigma[j - 1]
        for k in (0, 7, 70):
            want = (1 - sj**2 / sys.frob_sq) ** k * ((x0 - sys.x_ls) @ vj)
            got = bounds.expected_singular_coefficient(sys, f, j, k)
            assert got == pytest.approx(want, rel=1e-10, abs=1e-13)


def test_singular_index_out_of_rank(small_system):
    f = bounds.make_frame(small_system, np.zeros(15), np.zeros(15))
    with pytest.raises(IndexOutOfRank):
        bounds.expected_singular_coefficient(small_system, f, 7, 1)
    with pytest.raises(IndexOutOfRank):
        bounds.expected_singular_coefficient(small_system, f, 0, 1)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_closed_form_matches_recursion(seed):
    g = np.random.default_rng(seed)
    m, n = int(g.integers(2, 20)), int(g.integers(2, 20))
    r = int(g.integers(1, min(m, n) + 1))
    sys = LinearSystem(low_rank(m, n, r, seed), g.standard_normal(m))
    f = bounds.make_frame(sys, g.standard_normal(n), g.standard_normal(n))
    cps = [0, 1, 2, 17, 120]
    means = bounds.exact_mean_iterates(sys, f, cps)
    for j in range(1, sys.rank + 1):
        got = bounds.expected_singular_coefficient(sys, f, j, np.array(cps, dtype=float))
        assert_allclose((means - f.center) @ sys.svd.v[:, j - 1], got, atol=1e-10)


def test_exact_mean_start_and_limit():
    g = np.random.default_rng(4)
    a = g.standard_normal((10, 4))
    sys = LinearSystem(a, a @ np.ones(4))
    x0 = g.standard_normal(4)
    f = bounds.make_frame(sys, x0, np.zeros(4))
    assert_allclose(bounds.exact_mean_iterate(sys, f, 0), x0)
    errs = [np.linalg.norm(bounds.exact_mean_iterate(sys, f, k) - sys.x_ls) for k in (50, 100, 200)]
    rho = 1 - sys.sigma_min**2 / sys.frob_sq
    assert errs[2] <= errs[0] * rho**150 * (1 + 1e-6) + 1e-14


def test_ball_examples(diag_case):
    ball = bounds.smallest_ball(diag_case, [5.0, 7.0])
    assert_allclose(ball.center, [1.0, 7.0])
    assert ball.radius == pytest.approx(1.0)
    b2 = bounds.ball_for_reference(diag_case, bounds.make_frame(diag_case, [5.0, 7.0], [1.0, 0.0]))
    assert b2.radius == pytest.approx(1.0)
    # null-space shift of the reference leaves the radius unchanged
    b3 = bounds.ball_for_reference(diag_case, bounds.make_frame(diag_case, [5.0, 7.0], [1.0, 4.0]))
    assert b3.radius == pytest.approx(1.0)


def test_consistent_smallest_ball():
    sys = build_synthetic(SyntheticSpec(20, 8, 3, beta=0.0, seed=7))
    x0 = np.random.default_rng(0).standard_normal(8)
    ball = bounds.smallest_ball(sys, x0)
    assert ball.radius <= 1e-10
    assert_allclose(ball.center, linalg.project_null_space(sys.svd, x0) + sys.x_ls, atol=1e-10)


def test_smallest_ball_beats_random_references(small_system):
    g = np.random.default_rng(5)
    x0 = g.standard_normal(15)
    small = bounds.smallest_ball(small_system, x0)
    assert small.radius == pytest.approx(3.0 / small_system.sigma_min, rel=1e-9)
    for _ in range(200):
        b = bounds.ball_for_reference(small_system, bounds.make_frame(small_system, x0, g.standard_normal(15)))
        assert small.radius <= b.radius


def test_minimizing_pair_canonical(small_system):
    a_hat, b_hat = bounds.construct_minimizing_pair(small_system)
    assert_allclose(a_hat, small_system.a, atol=1e-10 * np.linalg.norm(small_system.a))
    assert_allclose(b_hat, small_system.a @ small_system.x_ls, atol=1e-10 * np.linalg.norm(small_system.b))
    e, eps = small_system.a - a_hat, small_system.b - b_hat
    x_hat = linalg.min_norm_least_squares(linalg.svd(a_hat), b_hat)
    lhs = np.linalg.norm(e @ x_hat - eps)
    rhs = np.linalg.norm(small_system.residual(small_system.x_ls))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def _pair_check(sys, y, **kw):
    a_hat, b_hat = bounds.construct_minimizing_pair(sys, y_null=y, **kw)
    x_hat = linalg.min_norm_least_squares(linalg.svd(a_hat), b_hat)
    e, eps = sys.a - a_hat, sys.b - b_hat
    lhs = np.linalg.norm(e @ x_hat - eps)
    rhs = np.linalg.norm(sys.residual(sys.x_ls))
    return x_hat, lhs, rhs


def test_minimizing_pair_null_shift(small_system):
    y = linalg.project_null_space(small_system.svd, np.random.default_rng(6).standard_normal(15))
    x_hat, lhs, rhs = _pair_check(small_system, y)
    assert_allclose(x_hat, small_system.x_ls + y, atol=1e-10 * (1 + np.linalg.norm(x_hat)))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_minimizing_pair_random_orthonormal_factor(small_system):
    g = np.random.default_rng(7)
    u, _ = np.linalg.qr(g.standard_normal((40, 6)))
    x_hat, lhs, rhs = _pair_check(small_system, None, u=u, sigma=np.ones(6))
    assert lhs == pytest.approx(rhs, rel=1e-10)


def test_minimizing_pair_rejects_row_space_shift(small_system):
    with pytest.raises(NullSpaceViolation):
        bounds.construct_minimizing_pair(small_system, y_null=small_system.svd.v[:, 0])


def test_scale_covariance(small_system):
    g = np.random.default_rng(8)
    x0, xs = g.standard_normal(15), g.standard_normal(15)
    big = small_system.scaled(7.5)
    cps = [0, 4, 40, 400]
    for fn in (bounds.mse_bound_curve, bounds.mean_bound_curve):
        c1 = fn(small_system, bounds.make_frame(small_system, x0, xs), cps)
        c2 = fn(big, bounds.make_frame(big, x0, xs), cps)
        assert_allclose(c2.values, c1.values, rtol=1e-12)
        assert c2.horizon == pytest.approx(c1.horizon, rel=1e-12)
    assert bounds.smallest_ball(big, x0).radius == pytest.approx(bounds.smallest_ball(small_system, x0).radius, rel=1e-12)
