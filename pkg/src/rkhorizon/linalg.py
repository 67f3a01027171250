"""Dense linear-algebra kernel.

Compact SVD by one-sided (Hestenes) Jacobi applied to the transposed
triangular factor of a column-pivoted QR, minimum-norm least squares through the compact
factors, and orthogonal projections onto the row space / null space.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import AllZeroMatrix, DimensionMismatch

EPS = np.finfo(np.float64).eps
MAX_SWEEPS = 80


def as_matrix(a, name="matrix") -> np.ndarray:
    """Validate and return a finite 2-D float64 array."""
    arr = np.array(a, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise DimensionMismatch(f"{name} must be a non-empty 2-D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def as_vector(x, dim=None, name="vector") -> np.ndarray:
    """Validate and return a finite 1-D float64 array, optionally of length ``dim``."""
    arr = np.array(x, dtype=np.float64)
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be 1-D, got shape {arr.shape}")
    if dim is not None and arr.shape[0] != dim:
        raise DimensionMismatch(f"{name} has length {arr.shape[0]}, expected {dim}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


@dataclass(frozen=True)
class SvdFactors:
    """Compact SVD ``A = U diag(sigma) V^T`` keeping only the retained singular values."""

    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray
    shape: tuple

    @property
    def rank(self) -> int:
        return int(self.sigma.shape[0])

    @property
    def frob_sq(self) -> float:
        return float(np.sum(self.sigma**2))

    @property
    def sigma_min(self) -> float:
        return float(self.sigma[-1])

    @property
    def sigma_max(self) -> float:
        return float(self.sigma[0])

    def reconstruct(self) -> np.ndarray:
        return (self.u * self.sigma) @ self.v.T


def _round_robin(n):
    """Pairings for a parallel Jacobi sweep: ``n-1`` rounds of disjoint pairs (n even)."""
    players = list(range(n))
    rounds = []
    for _ in range(n - 1):
        half = n // 2
        p = np.array(players[:half])
        q = np.array(players[half:][::-1])
        rounds.append((np.minimum(p, q), np.maximum(p, q)))
        players = [players[0]] + [players[-1]] + players[1:-1]
    return rounds


def _norm2_lower(r, iters=30):
    """Power-iteration lower estimate of the spectral norm of ``r``."""
    x = np.ones(r.shape[1])
    est = 0.0
    for _ in range(iters):
        y = r @ x
        ny = np.linalg.norm(y)
        if ny == 0.0:
            break
        x = r.T @ y
        nx = np.linalg.norm(x)
        est = nx / ny
        x /= nx
    return max(est, float(np.max(np.abs(np.diag(r)), initial=0.0)))


def _svd_tall(a, rank_tol):
    m, n = a.shape
    # A P = Q R with |R_kk| non-increasing; Jacobi then runs on R^T, whose
    # columns are already close to orthogonal, so few sweeps are needed.
    q, r, perm = scipy.linalg.qr(a, mode="economic", pivoting=True)
    # Rows of R whose trailing block has norm below tau/2 shift every singular
    # value by at most tau/2; dropping them before the sweeps keeps the Jacobi
    # stage at (numerical rank) columns.
    tau = rank_tol if rank_tol is not None else max(m, n) * EPS * _norm2_lower(r)
    row_tail = np.sqrt(np.cumsum(np.sum(r**2, axis=1)[::-1])[::-1])
    cut = 0.5 * tau
    keep_rows = int(np.count_nonzero(row_tail > cut))
    if keep_rows == 0:
        raise AllZeroMatrix("matrix has no nonzero singular value")
    x = r[:keep_rows].T.copy()
    odd = keep_rows % 2
    if odd:
        x = np.hstack([x, np.zeros((n, 1))])
    w, rot = _jacobi(x)
    if odd:
        w, rot = w[:, :keep_rows], rot[:keep_rows, :keep_rows]
    norms = np.linalg.norm(w, axis=0)
    order = np.argsort(-norms, kind="stable")
    norms = norms[order]
    if rank_tol is None:
        tau = max(m, n) * EPS * norms[0]
    keep = order[norms > tau]
    if keep.size == 0:
        raise AllZeroMatrix(f"every singular value is below the rank tolerance {tau:g}")
    sigma = norms[: keep.size]
    # R^T = W rot^T  =>  A = (Q rot) diag(sigma) (P W/sigma)^T
    u = q[:, :keep_rows] @ rot[:, keep]
    v = np.empty((n, keep.size))
    v[perm] = w[:, keep] / sigma
    return u, sigma, v


def _jacobi(w):
    """One-sided Jacobi on the (even number of) columns of ``w``; returns (W V, V)."""
    n = w.shape[1]
    v = np.eye(n)
    tol = n * EPS
    scale = np.linalg.norm(w)
    tiny = (EPS * scale * 1e-3) ** 2
    rounds = _round_robin(n) if n > 1 else []
    for _ in range(MAX_SWEEPS):
        rotated = False
        for p, q in rounds:
            wp, wq = w[:, p], w[:, q]
            alpha = np.einsum("ij,ij->j", wp, wp)
            beta = np.einsum("ij,ij->j", wq, wq)
            gamma = np.einsum("ij,ij->j", wp, wq)
            active = (alpha > tiny) & (beta > tiny) & (np.abs(gamma) > tol * np.sqrt(alpha * beta))
            if not active.any():
                continue
            rotated = True
            p, q = p[active], q[active]
            alpha, beta, gamma = alpha[active], beta[active], gamma[active]
            zeta = (beta - alpha) / (2.0 * gamma)
            t = np.where(zeta >= 0, 1.0, -1.0) / (np.abs(zeta) + np.sqrt(1.0 + zeta * zeta))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = c * t
            for mat in (w, v):
                mp, mq = mat[:, p], mat[:, q]
                mat[:, p] = c * mp - s * mq
                mat[:, q] = s * mp + c * mq
        if not rotated:
            break
    return w, v


def svd(a, rank_tol=None) -> SvdFactors:
    """Compact SVD with numerical rank detection.

    Singular values ``<= tau`` are discarded, where ``tau = rank_tol`` or, by
    default, ``max(m, n) * eps * sigma_1``.

    Raises
    ------
    AllZeroMatrix
        If no singular value exceeds ``tau``.
    """
    a = as_matrix(a)
    m, n = a.shape
    if m >= n:
        u, sigma, v = _svd_tall(a, rank_tol)
    else:
        v, sigma, u = _svd_tall(a.T, rank_tol)
    return SvdFactors(u=u, sigma=sigma, v=v, shape=(m, n))


def min_norm_least_squares(f: SvdFactors, b) -> np.ndarray:
    """``A^+ b = V diag(1/sigma) U^T b``."""
    b = as_vector(b, f.shape[0], "b")
    return f.v @ ((f.u.T @ b) / f.sigma)


def pinv(f: SvdFactors) -> np.ndarray:
    return (f.v / f.sigma) @ f.u.T


def project_row_space(f: SvdFactors, x) -> np.ndarray:
    x = as_vector(x, f.shape[1], "x")
    return f.v @ (f.v.T @ x)


def project_null_space(f: SvdFactors, x) -> np.ndarray:
    x = as_vector(x, f.shape[1], "x")
    return x - f.v @ (f.v.T @ x)


def project_column_space(f: SvdFactors, y) -> np.ndarray:
    y = as_vector(y, f.shape[0], "y")
    return f.u @ (f.u.T @ y)
