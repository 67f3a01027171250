"""LIBSVM text datasets, densified into ``(A, b)`` systems."""
from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds
from .errors import DensificationLimit, EmptyFile, MalformedLine, NonIncreasingIndex
from .solver import LinearSystem

DEFAULT_MAX_ENTRIES = 10**7


@dataclass(frozen=True)
class Dataset:
    a: np.ndarray
    b: np.ndarray
    name: str
    source_path: str

    def system(self, rank_tol=None) -> LinearSystem:
        return LinearSystem(self.a, self.b, rank_tol)


def _parse_float(tok, line_no, line):
    try:
        val = float(tok)
    except ValueError:
        raise MalformedLine(line_no, line, f"bad number {tok!r}") from None
    if not math.isfinite(val):
        raise MalformedLine(line_no, line, f"non-finite value {tok!r}")
    return val


def parse_libsvm(path, expected_dim=None, max_rows=None, max_entries=DEFAULT_MAX_ENTRIES) -> Dataset:
    """Read ``<label> <index>:<value> ...`` lines (1-based indices).

    Blank lines and lines starting with ``#`` are skipped. The column count
    is the larger of ``expected_dim`` and the largest index seen.
    """
    path = Path(path)
    labels = []
    entries = []
    max_index = 0
    with path.open("r", encoding="ascii") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if max_rows is not None and len(labels) >= max_rows:
                break
            tokens = line.split()
            label = _parse_float(tokens[0], line_no, line)
            row = []
            last = 0
            for tok in tokens[1:]:
                idx_s, sep, val_s = tok.partition(":")
                if not sep or not idx_s or not val_s:
                    raise MalformedLine(line_no, line, f"expected index:value, got {tok!r}")
                try:
                    idx = int(idx_s)
                except ValueError:
                    raise MalformedLine(line_no, line, f"bad index {idx_s!r}") from None
                if idx < 1:
                    raise MalformedLine(line_no, line, f"index {idx} is not 1-based")
                if idx <= last:
                    raise NonIncreasingIndex(line_no, line)
                last = idx
                row.append((idx - 1, _parse_float(val_s, line_no, line)))
            max_index = max(max_index, last)
            labels.append(label)
            entries.append(row)
    if not labels:
        raise EmptyFile(f"{path}: no data rows")
    n = max(max_index, expected_dim or 0)
    if n == 0:
        n = 1
    m = len(labels)
    if m * n > max_entries:
        raise DensificationLimit(f"{path}: {m} x {n} dense matrix exceeds {max_entries} entries")
    a = np.zeros((m, n))
    for i, row in enumerate(entries):
        for j, val in row:
            a[i, j] = val
    return Dataset(a=a, b=np.array(labels, dtype=float), name=path.stem, source_path=str(path))


def format_libsvm(a, b) -> str:
    """Serialize rows with zeros omitted; values use ``repr`` so they round-trip."""
    lines = []
    for row, label in zip(np.asarray(a), np.asarray(b)):
        nz = np.flatnonzero(row)
        feats = " ".join(f"{j + 1}:{float(row[j])!r}" for j in nz)
        lines.append(f"{float(label)!r} {feats}".rstrip())
    return "\n".join(lines) + "\n"


def write_libsvm(path, a, b):
    Path(path).write_text(format_libsvm(a, b), encoding="ascii")


def summary_stats(ds: Dataset, rank_tol=None) -> dict:
    sys = ds.system(rank_tol)
    f = sys.svd
    resid = float(np.linalg.norm(sys.residual(sys.x_ls)))
    ball = bounds.smallest_ball(sys, np.zeros(sys.shape[1]))
    return {
        "name": ds.name,
        "m": sys.shape[0],
        "n": sys.shape[1],
        "rank": f.rank,
        "sigma_min": f.sigma_min,
        "sigma_max": f.sigma_max,
        "frobenius_norm": math.sqrt(sys.frob_sq),
        "ratio": sys.ratio,
        "lstsq_residual": resid,
        "smallest_ball_radius": ball.radius,
        "zero_rows": int(sys.shape[0] - sys.dist.active_rows.size),
    }


def summarize(ds: Dataset, rank_tol=None) -> str:
    s = summary_stats(ds, rank_tol)
    return "\n".join(
        [
            f"dataset            {s['name']}",
            f"m x n              {s['m']} x {s['n']}",
            f"rank               {s['rank']}",
            f"sigma_min          {s['sigma_min']:.6g}",
            f"sigma_max          {s['sigma_max']:.6g}",
            f"||A||_F            {s['frobenius_norm']:.6g}",
            f"ratio F^2/smin^2   {s['ratio']:.6g}",
            f"lstsq residual     {s['lstsq_residual']:.6g}",
            f"smallest ball r    {s['smallest_ball_radius']:.6g}",
            f"zero rows          {s['zero_rows']}",
        ]
    )
