"""Closed-form expectations, error bounds and limiting balls for RK iterates.

All quantities are taken relative to the center ``x0_null + x_star_row``:
the null-space part of the starting point plus the row-space part of an
arbitrary reference point.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import DimensionMismatch, IndexOutOfRank, InconsistentUnderlying, NullSpaceViolation
from .linalg import as_matrix, as_vector
from .solver import LinearSystem


@dataclass(frozen=True)
class ReferenceFrame:
    x0: np.ndarray
    x_star: np.ndarray
    x0_null: np.ndarray
    x0_row: np.ndarray
    x_star_row: np.ndarray
    center: np.ndarray
    residual: np.ndarray
    residual_norm: float

    @property
    def initial_gap(self) -> float:
        """``||x0_row - x_star_row||``."""
        return float(np.linalg.norm(self.x0_row - self.x_star_row))


@dataclass(frozen=True)
class BoundCurve:
    checkpoints: list
    values: np.ndarray
    horizon: float
    kind: str  # "mse", "mean" or "underlying"


@dataclass(frozen=True)
class BallEstimate:
    center: np.ndarray
    radius: float


def decay(q, k):
    """``(1 - q)^k`` for ``0 <= q <= 1``, evaluated as ``exp(k log1p(-q))``."""
    q = np.asarray(q, dtype=float)
    k = np.asarray(k, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.exp(k * np.log1p(-q))
    out = np.where(k == 0, 1.0, out)
    return np.where((q >= 1.0) & (k > 0), 0.0, out)


def make_frame(sys: LinearSystem, x0, x_star) -> ReferenceFrame:
    n = sys.shape[1]
    x0 = as_vector(x0, n, "x0")
    x_star = as_vector(x_star, n, "x_star")
    f = sys.svd
    x0_row = linalg.project_row_space(f, x0)
    x0_null = x0 - x0_row
    x_star_row = linalg.project_row_space(f, x_star)
    residual = sys.residual(x_star)
    return ReferenceFrame(
        x0=x0,
        x_star=x_star,
        x0_null=x0_null,
        x0_row=x0_row,
        x_star_row=x_star_row,
        center=x0_null + x_star_row,
        residual=residual,
        residual_norm=float(np.linalg.norm(residual)),
    )


def _contraction(sys):
    return sys.sigma_min**2 / sys.frob_sq


def mse_bound_curve(sys: LinearSystem, frame: ReferenceFrame, checkpoints) -> BoundCurve:
    """Bound on ``E||x_k - center||^2``."""
    k = np.asarray(checkpoints, dtype=float)
    horizon = (frame.residual_norm / sys.sigma_min) ** 2
    values = decay(_contraction(sys), k) * frame.initial_gap**2 + horizon
    return BoundCurve(list(checkpoints), values, horizon, "mse")


def mean_bound_curve(sys: LinearSystem, frame: ReferenceFrame, checkpoints) -> BoundCurve:
    """Bound on ``||E x_k - center||``."""
    k = np.asarray(checkpoints, dtype=float)
    horizon = frame.residual_norm / sys.sigma_min
    values = decay(_contraction(sys), k) * frame.initial_gap + horizon
    return BoundCurve(list(checkpoints), values, horizon, "mean")


def underlying_pair_bound(sys: LinearSystem, a_true, b_true, x0, checkpoints, rtol=1e-8) -> BoundCurve:
    """MSE bound about ``x0_null + x_ls_row`` for a consistent pair ``(A, b)``.

    ``x_ls = A^+ b``; the horizon is ``||E x_ls - eps||^2 / sigma_min^2`` with
    ``E = A_noisy - A`` and ``eps = b_noisy - b``.
    """
    a_true = as_matrix(a_true, "a_true")
    if a_true.shape != sys.shape:
        raise DimensionMismatch(f"a_true has shape {a_true.shape}, expected {sys.shape}")
    b_true = as_vector(b_true, sys.shape[0], "b_true")
    x_ls = linalg.min_norm_least_squares(linalg.svd(a_true), b_true)
    gap = np.linalg.norm(a_true @ x_ls - b_true)
    if gap > rtol * max(np.linalg.norm(b_true), np.finfo(float).tiny):
        raise InconsistentUnderlying(f"A x = b is not consistent (residual {gap:.3e})")
    e = sys.a - a_true
    eps = sys.b - b_true
    noise = np.linalg.norm(e @ x_ls - eps)
    frame = make_frame(sys, x0, x_ls)
    k = np.asarray(checkpoints, dtype=float)
    horizon = (noise / sys.sigma_min) ** 2
    values = decay(_contraction(sys), k) * frame.initial_gap**2 + horizon
    return BoundCurve(list(checkpoints), values, horizon, "underlying")


def _check_index(sys, j):
    if not 1 <= j <= sys.rank:
        raise IndexOutOfRank(f"singular index {j} outside 1..{sys.rank}")


def singular_coefficient_terms(sys: LinearSystem, frame: ReferenceFrame, j: int, k):
    """The decaying and residual-driven parts of the expected coefficient.

    Returns ``(decay_term, residual_term)`` so that the expectation of
    ``<x_k - center, v_j>`` equals ``decay_term - residual_term``.
    """
    _check_index(sys, j)
    f = sys.svd
    s = f.sigma[j - 1]
    g = decay(s**2 / sys.frob_sq, k)
    start = float(f.v[:, j - 1] @ (frame.x0_row - frame.x_star_row))
    drive = float(f.u[:, j - 1] @ frame.residual) / s
    return g * start, (1.0 - g) * drive


def expected_singular_coefficient(sys: LinearSystem, frame: ReferenceFrame, j: int, k):
    """Exact ``E<x_k - center, v_j>`` (``j`` is 1-based)."""
    first, second = singular_coefficient_terms(sys, frame, j, k)
    out = first - second
    return float(out) if np.ndim(out) == 0 else out


def exact_mean_iterates(sys: LinearSystem, frame: ReferenceFrame, checkpoints) -> np.ndarray:
    """``E x_k`` at each checkpoint by propagating the one-step mean recursion.

    ``E z_{k+1} = (I - A^T A / F) E z_k - A^T (A x_star - b) / F`` with
    ``z = x - center`` and ``F = ||A||_F^2``; no singular vectors involved.
    """
    a = sys.a
    fro = sys.frob_sq
    gram = a.T @ a / fro
    shift = a.T @ (a @ frame.x_star - sys.b) / fro
    z = frame.x0 - frame.center
    out = np.empty((len(checkpoints), a.shape[1]))
    k = 0
    for c, target in enumerate(checkpoints):
        if target < k:
            raise ValueError("checkpoints must be non-decreasing")
        while k < target:
            z = z - gram @ z - shift
            k += 1
        out[c] = z + frame.center
    return out


def exact_mean_iterate(sys: LinearSystem, frame: ReferenceFrame, k: int) -> np.ndarray:
    if k < 0:
        raise ValueError("k must be non-negative")
    return exact_mean_iterates(sys, frame, [k])[0]


def ball_for_reference(sys: LinearSystem, frame: ReferenceFrame) -> BallEstimate:
    return BallEstimate(center=frame.center, radius=frame.residual_norm / sys.sigma_min)


def smallest_ball(sys: LinearSystem, x0) -> BallEstimate:
    """Minimum-radius ball, attained with the least-squares solution as reference."""
    frame = make_frame(sys, x0, sys.x_ls)
    radius = ball_for_reference(sys, frame).radius
    return BallEstimate(center=frame.x0_null + sys.x_ls, radius=radius)


def _orthonormal_check(q, name, tol=1e-10):
    err = np.abs(q.T @ q - np.eye(q.shape[1])).max(initial=0.0)
    if err > tol:
        raise ValueError(f"{name} does not have orthonormal columns (error {err:.2e})")


def construct_minimizing_pair(sys: LinearSystem, y_null=None, u=None, sigma=None, v=None, x_b=None, tol=1e-10):
    """Build a consistent pair ``(A_hat, b_hat)`` whose noise residual is minimal.

    ``A_hat = U diag(sigma) V^T`` and ``b_hat = A_hat x_b`` with
    ``V V^T x_b = x_ls + y_null``. Unspecified factors default to those of the
    noisy matrix; when ``y_null`` leaves the row space, ``V`` is extended by
    its normalized direction (or, if ``U`` cannot grow, the last right
    singular direction is swapped for it).
    """
    m, n = sys.shape
    f = sys.svd
    y = np.zeros(n) if y_null is None else as_vector(y_null, n, "y_null")
    scale = np.linalg.norm(sys.a) * max(np.linalg.norm(y), 1.0)
    if np.linalg.norm(sys.a @ y) > tol * scale:
        raise NullSpaceViolation("y_null is not in the null space of the matrix")
    target = sys.x_ls + y

    if v is None:
        v_mat, u_def, s_def = f.v, f.u, f.sigma
        y_perp = y - v_mat @ (v_mat.T @ y)
        ny = np.linalg.norm(y_perp)
        if ny > tol * max(np.linalg.norm(target), 1.0):
            if f.rank < m:
                v_mat = np.column_stack([v_mat, y_perp / ny])
                u_def = np.column_stack([u_def, _unit_outside(u_def, m)])
                s_def = np.append(s_def, f.sigma_min)
            else:
                head = v_mat[:, :-1]
                t = target - head @ (head.T @ target)
                v_mat = np.column_stack([head, t / np.linalg.norm(t)])
        v = v_mat
        if u is None:
            u = u_def
        if sigma is None:
            sigma = s_def
    v = as_matrix(v, "v")
    r = v.shape[1]
    if u is None:
        u = _first_orthonormal(f.u, m, r)
    if sigma is None:
        sigma = np.ones(r)
    u = as_matrix(u, "u")
    sigma = as_vector(sigma, r, "sigma")
    if u.shape != (m, r) or v.shape != (n, r):
        raise DimensionMismatch("factor shapes do not agree")
    if np.any(sigma <= 0):
        raise ValueError("sigma must be positive")
    _orthonormal_check(u, "u")
    _orthonormal_check(v, "v")
    x_b = target if x_b is None else as_vector(x_b, n, "x_b")
    if np.linalg.norm(v @ (v.T @ x_b) - target) > tol * max(np.linalg.norm(target), 1.0):
        raise ValueError("V V^T x_b must equal x_ls + y_null")
    a_hat = (u * sigma) @ v.T
    return a_hat, a_hat @ x_b


def _unit_outside(q, m):
    """A unit vector orthogonal to the columns of ``q`` (which has < m columns)."""
    resid = np.eye(m) - q @ q.T
    i = int(np.argmax(np.einsum("ij,ij->j", resid, resid)))
    w = resid[:, i]
    w = w - q @ (q.T @ w)
    return w / np.linalg.norm(w)


def _first_orthonormal(q, m, r):
    cols = [q[:, i] for i in range(min(r, q.shape[1]))]
    while len(cols) < r:
        cols.append(_unit_outside(np.column_stack(cols) if cols else np.zeros((m, 0)), m))
    return np.column_stack(cols)
