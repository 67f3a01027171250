"""Randomized Kaczmarz iteration and Monte Carlo replicate aggregation."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from .errors import DimensionMismatch, EmptyTraceSet, MismatchedCheckpoints, ZeroRow
from .linalg import SvdFactors, as_matrix, as_vector
from .sampling import RowDistribution, build_row_distribution, make_rng

# Uniform variates are drawn per run in blocks of this many steps.
DRAW_BLOCK = 4096


class LinearSystem:
    """The (possibly inconsistent) system ``A x ~ b`` with cached derived data."""

    def __init__(self, a, b, rank_tol=None, factors=None):
        self.a = as_matrix(a, "A")
        self.b = as_vector(b, self.a.shape[0], "b")
        self.rank_tol = rank_tol
        if factors is not None:
            if factors.shape != self.a.shape:
                raise DimensionMismatch("SVD factors do not match the matrix shape")
            self.__dict__["svd"] = factors
        self.a.setflags(write=False)
        self.b.setflags(write=False)

    @property
    def shape(self):
        return self.a.shape

    @cached_property
    def row_sq_norms(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.a, self.a)

    @cached_property
    def svd(self) -> SvdFactors:
        return linalg.svd(self.a, self.rank_tol)

    @cached_property
    def dist(self) -> RowDistribution:
        return build_row_distribution(self.a)

    @property
    def frob_sq(self) -> float:
        """Squared Frobenius norm, summed over rows."""
        return float(self.row_sq_norms.sum())

    @property
    def rank(self) -> int:
        return self.svd.rank

    @property
    def sigma_min(self) -> float:
        return self.svd.sigma_min

    @property
    def ratio(self) -> float:
        """``||A||_F^2 / sigma_min^2``; its reciprocal is the per-step contraction."""
        return self.frob_sq / self.sigma_min**2

    @cached_property
    def x_ls(self) -> np.ndarray:
        return linalg.min_norm_least_squares(self.svd, self.b)

    def residual(self, x) -> np.ndarray:
        return self.a @ as_vector(x, self.shape[1], "x") - self.b

    def scaled(self, c: float) -> "LinearSystem":
        return LinearSystem(c * self.a, c * self.b, self.rank_tol)


def default_checkpoints(max_iters: int, dense_until: int = 100, ratio: float = 1.2) -> list:
    """Every step up to ``dense_until``, then geometric with ``ratio``, plus ``max_iters``."""
    pts = list(range(min(max_iters, dense_until) + 1))
    k = float(dense_until)
    while True:
        k *= ratio
        nxt = int(np.ceil(k))
        if nxt >= max_iters:
            break
        if nxt > pts[-1]:
            pts.append(nxt)
    if pts[-1] != max_iters:
        pts.append(max_iters)
    return pts


@dataclass
class RkRunConfig:
    seed: int
    max_iters: int
    x0: np.ndarray
    checkpoints: list = None
    record_rows: bool = False

    def __post_init__(self):
        if self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        self.x0 = as_vector(self.x0, name="x0")
        if self.checkpoints is None:
            self.checkpoints = default_checkpoints(self.max_iters)
        cps = [int(k) for k in self.checkpoints]
        if not cps or cps[0] != 0 or cps[-1] != self.max_iters:
            raise ValueError("checkpoints must start at 0 and end at max_iters")
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("checkpoints must be strictly increasing")
        self.checkpoints = cps


@dataclass
class IterateTrace:
    checkpoints: list
    iterates: np.ndarray  # (len(checkpoints), n)
    selected_rows: np.ndarray = field(default=None, repr=False)
    seed: int = None


def rk_step(sys: LinearSystem, x, i: int) -> np.ndarray:
    """Project ``x`` onto the hyperplane ``<a_i, x> = b_i``."""
    x = as_vector(x, sys.shape[1], "x")
    if not 0 <= i < sys.shape[0]:
        raise IndexError(f"row {i} out of range")
    nrm = sys.row_sq_norms[i]
    if nrm == 0.0:
        raise ZeroRow(f"row {i} has zero norm")
    ai = sys.a[i]
    return x - ((ai @ x - sys.b[i]) / nrm) * ai


def run_batch(sys: LinearSystem, x0, seeds, max_iters, checkpoints, record_rows=False):
    """Run one RK replicate per seed, stepping all replicates together.

    Returns ``(iterates, rows)`` with ``iterates`` of shape
    ``(len(seeds), len(checkpoints), n)``; ``rows`` is ``None`` unless
    ``record_rows``. Replicate ``r`` depends only on ``seeds[r]``.
    """
    n = sys.shape[1]
    x0 = as_vector(x0, n, "x0")
    seeds = [int(s) for s in seeds]
    runs = len(seeds)
    cps = list(checkpoints)
    out = np.empty((runs, len(cps), n))
    rows_log = np.empty((runs, max_iters), dtype=np.int64) if record_rows else None
    x = np.tile(x0, (runs, 1))
    out[:, 0] = x
    if max_iters == 0:
        return out, rows_log
    dist = sys.dist
    a, b, rsq = sys.a, sys.b, sys.row_sq_norms
    rngs = [make_rng(s) for s in seeds]
    next_cp = 1
    k = 0
    while k < max_iters:
        block = min(DRAW_BLOCK, max_iters - k)
        u = np.stack([g.random(block) for g in rngs])
        idx = dist.rows_from_uniforms(u)
        if record_rows:
            rows_log[:, k : k + block] = idx
        for t in range(block):
            i = idx[:, t]
            ai = a[i]
            r = (np.einsum("ij,ij->i", ai, x) - b[i]) / rsq[i]
            x -= r[:, None] * ai
            k += 1
            if k == cps[next_cp]:
                out[:, next_cp] = x
                next_cp += 1
    return out, rows_log


def run_rk(sys: LinearSystem, cfg: RkRunConfig) -> IterateTrace:
    if cfg.x0.shape[0] != sys.shape[1]:
        raise DimensionMismatch(f"x0 has length {cfg.x0.shape[0]}, expected {sys.shape[1]}")
    its, rows = run_batch(sys, cfg.x0, [cfg.seed], cfg.max_iters, cfg.checkpoints, cfg.record_rows)
    return IterateTrace(
        checkpoints=list(cfg.checkpoints),
        iterates=its[0],
        selected_rows=None if rows is None else rows[0],
        seed=cfg.seed,
    )


def run_replicates(sys, x0, base_seed, runs, max_iters, checkpoints=None, chunk=2048):
    """``runs`` independent traces seeded ``base_seed + i``."""
    if checkpoints is None:
        checkpoints = default_checkpoints(max_iters)
    cfg = RkRunConfig(seed=base_seed, max_iters=max_iters, x0=x0, checkpoints=checkpoints)
    traces = []
    for start in range(0, runs, chunk):
        seeds = [base_seed + i for i in range(start, min(runs, start + chunk))]
        its, _ = run_batch(sys, cfg.x0, seeds, max_iters, cfg.checkpoints)
        traces.extend(
            IterateTrace(checkpoints=list(cfg.checkpoints), iterates=its[r], seed=s)
            for r, s in enumerate(seeds)
        )
    return traces


@dataclass
class Expectations:
    """Per-checkpoint Monte Carlo summaries around a fixed center.

    ``sq_error_stderr`` is the standard error of the mean squared error,
    ``mean_error_stderr`` the root of ``trace(Cov)/runs`` for the mean iterate.
    Both are ``nan`` for a single run.
    """

    checkpoints: list
    rms_error: np.ndarray
    mean_error: np.ndarray
    mse: np.ndarray
    sq_error_stderr: np.ndarray
    rms_error_stderr: np.ndarray
    mean_error_stderr: np.ndarray
    mean_iterate: np.ndarray
    run_count: int


def stack_traces(traces) -> np.ndarray:
    traces = list(traces)
    if not traces:
        raise EmptyTraceSet("no traces to aggregate")
    cps = traces[0].checkpoints
    for t in traces[1:]:
        if list(t.checkpoints) != list(cps):
            raise MismatchedCheckpoints("traces do not share checkpoints")
    return np.stack([t.iterates for t in traces])


def empirical_expectations(traces, frame) -> Expectations:
    """Root-mean-square error and error of the mean about ``frame.center``."""
    traces = list(traces)
    its = stack_traces(traces)
    runs = its.shape[0]
    dev = its - frame.center
    sq = np.einsum("rkn,rkn->rk", dev, dev)
    mse = sq.mean(axis=0)
    rms = np.sqrt(mse)
    mean_it = its.mean(axis=0)
    mean_dev = mean_it - frame.center
    mean_err = np.sqrt(np.einsum("kn,kn->k", mean_dev, mean_dev))
    if runs > 1:
        sq_se = sq.std(axis=0, ddof=1) / np.sqrt(runs)
        with np.errstate(divide="ignore", invalid="ignore"):
            rms_se = np.where(rms > 0, sq_se / (2 * rms), 0.0)
        spread = its - mean_it
        mean_se = np.sqrt(np.einsum("rkn,rkn->k", spread, spread) / (runs - 1) / runs)
    else:
        sq_se = rms_se = mean_se = np.full(len(traces[0].checkpoints), np.nan)
    return Expectations(
        checkpoints=list(traces[0].checkpoints),
        rms_error=rms,
        mean_error=mean_err,
        mse=mse,
        sq_error_stderr=sq_se,
        rms_error_stderr=rms_se,
        mean_error_stderr=mean_se,
        mean_iterate=mean_it,
        run_count=runs,
    )
