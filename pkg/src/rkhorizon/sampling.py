"""Row selection with probability proportional to squared row norms.

Randomness comes from numpy's PCG64 bit generator, whose output stream is
fixed by the seed on every platform. Each draw consumes exactly one uniform
double, so ``Generator.random(k)`` yields the same indices as ``k`` single
calls of :func:`sample_row`.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import AllZeroMatrix
from .linalg import as_matrix


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(int(seed)))


@dataclass(frozen=True)
class RowDistribution:
    cumulative: np.ndarray
    active_rows: np.ndarray

    @property
    def total(self) -> float:
        return float(self.cumulative[-1])

    @property
    def probabilities(self) -> np.ndarray:
        """Probability of each active row, aligned with ``active_rows``."""
        weights = np.diff(self.cumulative, prepend=0.0)
        return weights / self.total

    def full_probabilities(self, m: int) -> np.ndarray:
        p = np.zeros(m)
        p[self.active_rows] = self.probabilities
        return p

    def rows_from_uniforms(self, u) -> np.ndarray:
        """Map uniforms in [0, 1) to row indices by inverse CDF."""
        pos = np.searchsorted(self.cumulative, np.asarray(u) * self.total, side="right")
        pos = np.minimum(pos, self.cumulative.shape[0] - 1)
        return self.active_rows[pos]


def build_row_distribution(a) -> RowDistribution:
    a = as_matrix(a)
    sq = np.einsum("ij,ij->i", a, a)
    active = np.flatnonzero(sq > 0.0)
    if active.size == 0:
        raise AllZeroMatrix("every row of the matrix is zero")
    return RowDistribution(cumulative=np.cumsum(sq[active]), active_rows=active)


def sample_row(dist: RowDistribution, rng: np.random.Generator) -> int:
    return int(dist.rows_from_uniforms(rng.random()))
