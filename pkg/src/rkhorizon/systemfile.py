"""On-disk interchange format for linear systems.

A system ``NAME`` is stored as two files side by side::

    NAME.json   header: {"format": "rkhorizon-system", "version": 1,
                         "m": ..., "n": ..., "payload": "NAME.npz",
                         "provenance": {...}}
    NAME.npz    numpy archive with float64 arrays "a" (m x n) and "b" (m,)

``provenance`` is free-form (generator spec and seed, source file, ...).
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, WriteFailure
from .solver import LinearSystem

FORMAT = "rkhorizon-system"


def save_system(path, a, b, provenance=None) -> Path:
    """Write ``path`` (``.json`` header) and its ``.npz`` payload; returns the header path."""
    header_path = Path(path).with_suffix(".json")
    payload = header_path.with_suffix(".npz")
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    header = {
        "format": FORMAT,
        "version": 1,
        "m": int(a.shape[0]),
        "n": int(a.shape[1]),
        "payload": payload.name,
        "provenance": provenance or {},
    }
    try:
        header_path.parent.mkdir(parents=True, exist_ok=True)
        with payload.open("wb") as fh:
            np.savez(fh, a=a, b=b)
        header_path.write_text(json.dumps(header, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise WriteFailure(f"cannot write system to {header_path}: {exc}") from exc
    return header_path


def load_system(path, rank_tol=None):
    """Return ``(LinearSystem, header)`` for a header written by :func:`save_system`."""
    header_path = Path(path)
    if header_path.suffix != ".json":
        header_path = header_path.with_suffix(".json")
    header = json.loads(header_path.read_text())
    if header.get("format") != FORMAT:
        raise ValueError(f"{header_path} is not a {FORMAT} header")
    with np.load(header_path.parent / header["payload"]) as data:
        a, b = data["a"], data["b"]
    if a.shape != (header["m"], header["n"]):
        raise DimensionMismatch(f"payload shape {a.shape} disagrees with header")
    return LinearSystem(a, b, rank_tol), header
