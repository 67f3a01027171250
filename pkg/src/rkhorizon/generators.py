"""Synthetic test instances: low-rank Gaussian matrices and controlled residuals."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .errors import IndexOutOfRank, NoComplement
from .linalg import as_matrix

# Independent streams derived from one user seed.
_STREAM_MATRIX = 0
_STREAM_RHS = 1
_STREAM_POINTS = 2


def _stream(seed, stream):
    ss = np.random.SeedSequence(int(seed), spawn_key=(stream,))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class SyntheticSpec:
    m: int
    n: int
    r: int
    beta: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 1 <= self.r <= min(self.m, self.n):
            raise ValueError(f"rank r={self.r} must lie in [1, min(m, n)={min(self.m, self.n)}]")
        if self.beta < 0:
            raise ValueError("beta must be non-negative")


def gen_low_rank_gaussian(spec: SyntheticSpec) -> np.ndarray:
    """Product of an ``m x r`` and an ``r x n`` standard Gaussian matrix."""
    g = _stream(spec.seed, _STREAM_MATRIX)
    left = g.standard_normal((spec.m, spec.r))
    right = g.standard_normal((spec.r, spec.n))
    return left @ right


def gen_rhs_with_residual(a, beta, seed, factors=None, max_tries=100) -> np.ndarray:
    """``b = A g + beta w`` with ``w`` a unit vector orthogonal to ``Col(A)``.

    Raises
    ------
    NoComplement
        If ``beta > 0`` but ``A`` has full row rank.
    """
    a = as_matrix(a)
    if beta < 0:
        raise ValueError("beta must be non-negative")
    m, n = a.shape
    f = factors if factors is not None else linalg.svd(a)
    g = _stream(seed, _STREAM_RHS)
    y = a @ g.standard_normal(n)
    if beta == 0:
        return y
    if f.rank >= m:
        raise NoComplement("column space is all of R^m; no orthogonal complement")
    for _ in range(max_tries):
        h = g.standard_normal(m)
        w = h - f.u @ (f.u.T @ h)
        # second pass removes the rounding left by the first projection
        w = w - f.u @ (f.u.T @ w)
        nw = np.linalg.norm(w)
        if nw >= 1e-8 * np.linalg.norm(h):
            return y + beta * (w / nw)
    raise NoComplement("could not draw a direction outside the column space")


def build_synthetic(spec: SyntheticSpec):
    """Matrix and right-hand side for ``spec``."""
    from .solver import LinearSystem

    a = gen_low_rank_gaussian(spec)
    f = linalg.svd(a)
    b = gen_rhs_with_residual(a, spec.beta, spec.seed, factors=f)
    return LinearSystem(a, b, factors=f)


def parse_mode(mode):
    """Accept ``"random"``, ``"lstsq"``, ``"zero"``, ``"in_row_space"``,
    ``"singular_vector:j"`` or ``("singular_vector", j)``."""
    if isinstance(mode, (tuple, list)):
        return str(mode[0]), int(mode[1])
    mode = str(mode)
    if mode.startswith("singular_vector"):
        _, _, j = mode.partition(":")
        return "singular_vector", int(j) if j else None
    return mode, None


def gen_reference_points(n, mode, sys=None, seed=0, x0_mode="random", scale=1.0):
    """Starting point and reference point.

    ``mode`` picks the reference point: Gaussian (``random``), the
    minimum-norm least-squares solution (``lstsq``) or the ``j``-th right
    singular vector (``singular_vector:j``; ``j`` defaults to the rank).
    ``x0_mode`` is ``random``, ``zero`` or ``in_row_space``; random vectors
    are multiplied by ``scale``.
    """
    g = _stream(seed, _STREAM_POINTS)
    x0_raw = scale * g.standard_normal(n)
    x_rand = scale * g.standard_normal(n)

    if x0_mode == "random":
        x0 = x0_raw
    elif x0_mode == "zero":
        x0 = np.zeros(n)
    elif x0_mode == "in_row_space":
        x0 = linalg.project_row_space(sys.svd, x0_raw)
    else:
        raise ValueError(f"unknown x0 mode {x0_mode!r}")

    kind, j = parse_mode(mode)
    if kind == "random":
        x_star = x_rand
    elif kind == "lstsq":
        x_star = sys.x_ls.copy()
    elif kind == "singular_vector":
        rank = sys.rank
        j = rank if j is None else j
        if not 1 <= j <= rank:
            raise IndexOutOfRank(f"singular index {j} outside 1..{rank}")
        x_star = sys.svd.v[:, j - 1].copy()
    else:
        raise ValueError(f"unknown reference mode {mode!r}")
    return x0, x_star

