import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from rkhorizon import linalg
from rkhorizon.errors import AllZeroMatrix, DimensionMismatch

from conftest import low_rank


def test_identity():
    f = linalg.svd(np.eye(3))
    assert f.rank == 3
    assert_allclose(f.sigma, 1.0)
    assert_allclose(np.abs(f.u), np.eye(3), atol=1e-14)
    assert_allclose(np.abs(f.v), np.eye(3), atol=1e-14)


def test_diagonal_rank_two():
    f = linalg.svd(np.diag([2.0, 1.0, 0.0]))
    assert f.rank == 2
    assert_allclose(f.sigma, [2.0, 1.0])
    assert f.sigma_min == pytest.approx(1.0)


def test_product_rank_detected():
    a = low_rank(20, 8, 5, 0)
    f = linalg.svd(a)
    assert f.rank == 5
    assert np.linalg.norm(f.reconstruct() - a) <= 1e-10 * np.linalg.norm(a)


def test_wide_input():
    a = low_rank(6, 30, 4, 1)
    f = linalg.svd(a)
    assert f.rank == 4 and f.u.shape == (6, 4) and f.v.shape == (30, 4)
    assert_allclose(f.reconstruct(), a, atol=1e-12 * np.linalg.norm(a))


def test_singular_values_match_lapack():
    a = np.random.default_rng(2).standard_normal((30, 12))
    assert_allclose(linalg.svd(a).sigma, np.linalg.svd(a, compute_uv=False), rtol=1e-12)


def test_rank_tol_override():
    f = linalg.svd(np.diag([3.0, 1e-3, 1e-9]), rank_tol=1e-4)
    assert f.rank == 2


def test_zero_matrix_rejected():
    with pytest.raises(AllZeroMatrix):
        linalg.svd(np.zeros((3, 2)))


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        linalg.svd(np.array([[1.0, np.nan]]))


def test_lstsq_examples():
    assert_allclose(linalg.min_norm_least_squares(linalg.svd(np.eye(2)), [3, 4]), [3, 4])
    f = linalg.svd(np.array([[1.0, 0], [0, 0]]))
    assert_allclose(linalg.min_norm_least_squares(f, [1, 1]), [1, 0], atol=1e-15)


def test_lstsq_matches_normal_equations():
    g = np.random.default_rng(3)
    a, b = g.standard_normal((10, 4)), g.standard_normal(10)
    x = linalg.min_norm_least_squares(linalg.svd(a), b)
    assert_allclose(x, np.linalg.solve(a.T @ a, a.T @ b), rtol=1e-10)


def test_moore_penrose_conditions():
    a = np.random.default_rng(4).standard_normal((10, 4))
    p = linalg.pinv(linalg.svd(a))
    assert_allclose(a @ p @ a, a, atol=1e-10 * np.linalg.norm(a))
    assert_allclose(p @ a @ p, p, atol=1e-10 * np.linalg.norm(p))
    assert_allclose((a @ p).T, a @ p, atol=1e-10)
    assert_allclose((p @ a).T, p @ a, atol=1e-10)


def test_lstsq_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        linalg.min_norm_least_squares(linalg.svd(np.eye(3)), [1.0, 2.0])
    with pytest.raises(DimensionMismatch):
        linalg.project_row_space(linalg.svd(np.eye(3)), [1.0, 2.0])


def test_projection_examples():
    f = linalg.svd(np.eye(2))
    assert_allclose(linalg.project_row_space(f, [1, 2]), [1, 2])
    assert_allclose(linalg.project_null_space(f, [1, 2]), [0, 0], atol=1e-15)
    f = linalg.svd(np.array([[1.0, 0.0]]))
    assert_allclose(linalg.project_row_space(f, [3, 5]), [3, 0], atol=1e-15)
    assert_allclose(linalg.project_null_space(f, [3, 5]), [0, 5], atol=1e-15)


def test_projection_decomposition():
    a = low_rank(8, 6, 3, 5)
    f = linalg.svd(a)
    x = np.random.default_rng(6).standard_normal(6)
    row, null = linalg.project_row_space(f, x), linalg.project_null_space(f, x)
    assert_allclose(row + null, x, atol=1e-12)
    assert np.linalg.norm(a @ null) <= 1e-10 * np.linalg.norm(a) * np.linalg.norm(x)


@st.composite
def matrices(draw):
    m = draw(st.integers(1, 50))
    n = draw(st.integers(1, 50))
    r = draw(st.integers(1, min(m, n)))
    seed = draw(st.integers(0, 2**32 - 1))
    return low_rank(m, n, r, seed), r


@settings(max_examples=60, deadline=None)
@given(matrices())
def test_svd_invariants(case):
    a, r = case
    f = linalg.svd(a)
    assert f.rank == r
    eye = np.eye(f.rank)
    assert np.abs(f.u.T @ f.u - eye).max() <= 1e-10
    assert np.abs(f.v.T @ f.v - eye).max() <= 1e-10
    assert np.all(f.sigma > 0) and np.all(np.diff(f.sigma) <= 0)
    assert np.linalg.norm(f.reconstruct() - a) <= 1e-10 * (1 + np.linalg.norm(a))
    assert f.frob_sq == pytest.approx(np.sum(f.sigma**2), rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(matrices(), st.integers(0, 2**32 - 1))
def test_projection_properties(case, seed):
    a, _ = case
    f = linalg.svd(a)
    x = np.random.default_rng(seed).standard_normal(a.shape[1])
    x /= np.linalg.norm(x)
    p = linalg.project_row_space(f, x)
    assert np.abs(linalg.project_row_space(f, p) - p).max() <= 1e-12
    assert abs(p @ linalg.project_null_space(f, x)) <= 1e-12
    assert np.linalg.norm(p) <= 1 + 1e-12
    # consistent right-hand side recovers the row-space component
    got = linalg.min_norm_least_squares(f, a @ x)
    assert np.linalg.norm(got - p) <= 1e-10 * max(np.linalg.norm(p), 1e-300) + 1e-12
