"""Monte Carlo experiments and ball reports.

Outputs are a long-form CSV (``iteration,series,value,stderr,run_count``)
plus a JSON sidecar holding the resolved configuration and a summary of
the system. Identical configurations give byte-identical files.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import bounds, linalg
from .errors import IndexOutOfRank, WriteFailure
from .generators import SyntheticSpec, build_synthetic, gen_reference_points
from .ingest import parse_libsvm
from .solver import LinearSystem, default_checkpoints, empirical_expectations, run_replicates, stack_traces
from .systemfile import load_system

CSV_HEADER = ("iteration", "series", "value", "stderr", "run_count")


@dataclass
class ExperimentConfig:
    """Everything needed to reproduce one experiment.

    ``source`` is one of::

        {"kind": "synthetic", "m": .., "n": .., "r": .., "beta": .., "seed": ..}
        {"kind": "libsvm", "path": .., "expected_dim": .., "max_rows": ..}
        {"kind": "file", "path": ..}             # systemfile header
        {"kind": "inline", "a": [[..]], "b": [..]}

    ``reference`` is ``random``, ``lstsq`` or ``singular_vector:j``;
    ``x0_mode`` is ``random``, ``zero`` or ``in_row_space``. Explicit ``x0``
    / ``x_star`` lists override the modes. ``max_iters=None`` means
    ``ceil(iters_per_ratio * ||A||_F^2 / sigma_min^2)``.
    """

    source: dict = field(default_factory=lambda: {"kind": "synthetic", "m": 200, "n": 100, "r": 60, "beta": 10.0, "seed": 0})
    homogeneous: bool = False
    reference: str = "random"
    x0_mode: str = "random"
    x0: list = None
    x_star: list = None
    scale: float = 1.0
    runs: int = 20
    max_iters: int = None
    iters_per_ratio: float = 5.0
    checkpoints: object = "default"
    base_seed: int = 0
    point_seed: int = None
    track: list = field(default_factory=list)
    ball_samples: int = 100
    rank_tol: float = None
    out: str = None

    def __post_init__(self):
        if self.runs < 1:
            raise ValueError("runs must be at least 1")
        if self.max_iters is not None and self.max_iters < 0:
            raise ValueError("max_iters must be non-negative")
        self.track = [int(j) for j in self.track]

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path):
        return cls.from_dict(json.loads(Path(path).read_text()))

    def to_dict(self):
        return asdict(self)


def build_system(cfg: ExperimentConfig):
    """Return ``(LinearSystem, provenance dict)`` for ``cfg.source``."""
    src = dict(cfg.source)
    kind = src.pop("kind", "synthetic")
    if kind == "synthetic":
        spec = SyntheticSpec(
            m=int(src["m"]), n=int(src["n"]), r=int(src["r"]),
            beta=float(src.get("beta", 0.0)), seed=int(src.get("seed", 0)),
        )
        sys = build_synthetic(spec)
        prov = {"kind": kind, **asdict(spec)}
    elif kind == "libsvm":
        ds = parse_libsvm(src["path"], src.get("expected_dim"), src.get("max_rows"))
        sys = ds.system(cfg.rank_tol)
        prov = {"kind": kind, "path": str(src["path"]), "name": ds.name}
    elif kind == "file":
        sys, header = load_system(src["path"], cfg.rank_tol)
        prov = {"kind": kind, "path": str(src["path"]), "provenance": header.get("provenance", {})}
    elif kind == "inline":
        sys = LinearSystem(src["a"], src["b"], cfg.rank_tol)
        prov = {"kind": kind}
    else:
        raise ValueError(f"unknown system source {kind!r}")
    if cfg.homogeneous:
        sys = LinearSystem(sys.a, np.zeros(sys.shape[0]), cfg.rank_tol, factors=sys.svd)
        prov["homogeneous"] = True
    return sys, prov


def build_frame(cfg: ExperimentConfig, sys: LinearSystem):
    seed = cfg.base_seed if cfg.point_seed is None else cfg.point_seed
    x0, x_star = gen_reference_points(
        sys.shape[1], cfg.reference, sys, seed=seed, x0_mode=cfg.x0_mode, scale=cfg.scale
    )
    if cfg.x0 is not None:
        x0 = linalg.as_vector(cfg.x0, sys.shape[1], "x0")
    if cfg.x_star is not None:
        x_star = linalg.as_vector(cfg.x_star, sys.shape[1], "x_star")
    return bounds.make_frame(sys, x0, x_star)


def resolve_iters(cfg: ExperimentConfig, sys: LinearSystem) -> int:
    if cfg.max_iters is not None:
        return int(cfg.max_iters)
    return int(math.ceil(cfg.iters_per_ratio * sys.ratio))


def resolve_checkpoints(cfg: ExperimentConfig, max_iters: int) -> list:
    cp = cfg.checkpoints
    if cp is None or cp == "default":
        return default_checkpoints(max_iters)
    if isinstance(cp, dict):
        return default_checkpoints(max_iters, int(cp.get("dense_until", 100)), float(cp.get("ratio", 1.2)))
    pts = sorted({int(k) for k in cp if 0 <= int(k) <= max_iters} | {0, max_iters})
    return pts


def system_summary(sys: LinearSystem, frame) -> dict:
    f = sys.svd
    return {
        "m": sys.shape[0],
        "n": sys.shape[1],
        "rank": f.rank,
        "sigma_max": f.sigma_max,
        "sigma_min": f.sigma_min,
        "frobenius_sq": sys.frob_sq,
        "ratio": sys.ratio,
        "lstsq_residual": float(np.linalg.norm(sys.residual(sys.x_ls))),
        "reference_residual": frame.residual_norm,
        "initial_gap": frame.initial_gap,
        "x0_null_norm": float(np.linalg.norm(frame.x0_null)),
    }


@dataclass
class ExperimentResult:
    config: dict
    summary: dict
    checkpoints: list
    rows: list  # (iteration, series, value, stderr, run_count)
    expectations: object
    mse_bound: object
    mean_bound: object
    coefficients: dict  # j -> dict of arrays
    balls: dict
    null_drift: np.ndarray

    def series(self, name):
        """``(iterations, values)`` for one series of the long-form table."""
        its = [r[0] for r in self.rows if r[1] == name]
        vals = [r[2] for r in self.rows if r[1] == name]
        return np.array(its), np.array(vals)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for it, name, val, se, cnt in self.rows:
            w.writerow([it, name, _fmt(val), "" if se is None else _fmt(se), "" if cnt is None else cnt])
        return buf.getvalue()

    def sidecar(self) -> dict:
        return {"config": self.config, "system": self.summary, "balls": self.balls, "checkpoints": self.checkpoints}


def _fmt(x):
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    return obj


def _write(out_dir, name, csv_text=None, payload=None):
    out = Path(out_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        if csv_text is not None:
            (out / f"{name}.csv").write_text(csv_text)
        if payload is not None:
            (out / f"{name}.json").write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        raise WriteFailure(f"cannot write {name} output to {out}: {exc}") from exc


def run_experiment(cfg: ExperimentConfig, write=True) -> ExperimentResult:
    sys, prov = build_system(cfg)
    frame = build_frame(cfg, sys)
    for j in cfg.track:
        if not 1 <= j <= sys.rank:
            raise IndexOutOfRank(f"tracked singular index {j} outside 1..{sys.rank}")
    max_iters = resolve_iters(cfg, sys)
    cps = resolve_checkpoints(cfg, max_iters)

    traces = run_replicates(sys, frame.x0, cfg.base_seed, cfg.runs, max_iters, cps)
    exp = empirical_expectations(traces, frame)
    its = stack_traces(traces)
    mse = bounds.mse_bound_curve(sys, frame, cps)
    mean = bounds.mean_bound_curve(sys, frame, cps)
    exact_means = bounds.exact_mean_iterates(sys, frame, cps)
    exact_mean_err = np.linalg.norm(exact_means - frame.center, axis=1)

    v = sys.svd.v
    drift = its - its[:, :1]
    null_drift = np.linalg.norm(drift - (drift @ v) @ v.T, axis=2).max(axis=0)

    runs = exp.run_count
    rows = []
    for c, k in enumerate(cps):
        rows.append((k, "rms_error", exp.rms_error[c], exp.rms_error_stderr[c], runs))
        rows.append((k, "mean_error", exp.mean_error[c], exp.mean_error_stderr[c], runs))
        rows.append((k, "mse", exp.mse[c], exp.sq_error_stderr[c], runs))
        rows.append((k, "mse_bound", mse.values[c], None, None))
        rows.append((k, "sqrt_mse_bound", math.sqrt(mse.values[c]), None, None))
        rows.append((k, "mean_bound", mean.values[c], None, None))
        rows.append((k, "mse_horizon", mse.horizon, None, None))
        rows.append((k, "mean_horizon", mean.horizon, None, None))
        rows.append((k, "exact_mean_error", exact_mean_err[c], None, None))
        rows.append((k, "null_drift", null_drift[c], None, runs))

    coefficients = {}
    kk = np.asarray(cps, dtype=float)
    for j in cfg.track:
        vj = v[:, j - 1]
        samples = (its - frame.center) @ vj  # (runs, checkpoints)
        emp = samples.mean(axis=0)
        se = samples.std(axis=0, ddof=1) / math.sqrt(runs) if runs > 1 else np.full(len(cps), np.nan)
        first, second = bounds.singular_coefficient_terms(sys, frame, j, kk)
        expected = bounds.expected_singular_coefficient(sys, frame, j, kk)
        recursion = (exact_means - frame.center) @ vj
        coefficients[j] = {
            "empirical": emp, "stderr": se, "expected": expected,
            "decay_term": first, "residual_term": second, "recursion": recursion,
        }
        for c, k in enumerate(cps):
            rows.append((k, f"coef_empirical_j{j}", emp[c], se[c], runs))
            rows.append((k, f"coef_expected_j{j}", expected[c], None, None))
            rows.append((k, f"coef_decay_j{j}", first[c], None, None))
            rows.append((k, f"coef_residual_j{j}", second[c], None, None))
            rows.append((k, f"coef_recursion_j{j}", recursion[c], None, None))

    ref_ball = bounds.ball_for_reference(sys, frame)
    small = bounds.smallest_ball(sys, frame.x0)
    balls = {
        "reference": {"center_norm": float(np.linalg.norm(ref_ball.center)), "radius": ref_ball.radius},
        "smallest": {"center_norm": float(np.linalg.norm(small.center)), "radius": small.radius},
    }
    resolved = cfg.to_dict()
    # the output location is not part of the experiment's identity
    resolved.pop("out")
    resolved.update({"max_iters": max_iters, "resolved_source": prov})
    result = ExperimentResult(
        config=resolved,
        summary=system_summary(sys, frame),
        checkpoints=cps,
        rows=rows,
        expectations=exp,
        mse_bound=mse,
        mean_bound=mean,
        coefficients=coefficients,
        balls=balls,
        null_drift=null_drift,
    )
    if write and cfg.out:
        _write(cfg.out, "experiment", result.to_csv(), result.sidecar())
    return result


def ball_report(cfg: ExperimentConfig, write=True):
    """Radii of sampled reference balls against the smallest ball.

    The sample always contains the least-squares solution and, when the null
    space is nontrivial, least-squares plus null-space shifts. Returns
    ``(text, payload)``; raises ``AssertionError`` if any sampled radius
    beats the smallest ball.
    """
    sys, prov = build_system(cfg)
    frame0 = build_frame(cfg, sys)
    x0 = frame0.x0
    n = sys.shape[1]
    seed = cfg.base_seed if cfg.point_seed is None else cfg.point_seed
    g = np.random.Generator(np.random.PCG64(np.random.SeedSequence(int(seed), spawn_key=(3,))))
    small = bounds.smallest_ball(sys, x0)

    candidates = [("lstsq", sys.x_ls)]
    if sys.rank < n:
        for t in range(3):
            y = linalg.project_null_space(sys.svd, g.standard_normal(n))
            candidates.append((f"lstsq+null{t}", sys.x_ls + y))
    if cfg.x_star is not None:
        candidates.append(("configured", linalg.as_vector(cfg.x_star, n, "x_star")))
    for t in range(cfg.ball_samples):
        candidates.append((f"random{t}", sys.x_ls + cfg.scale * g.standard_normal(n)))

    entries = []
    for label, xs in candidates:
        ball = bounds.ball_for_reference(sys, bounds.make_frame(sys, x0, xs))
        entries.append({"label": label, "radius": ball.radius, "center": ball.center.tolist()})
    entries.sort(key=lambda e: (e["radius"], e["label"]))
    minimum = entries[0]["radius"]
    slack = 1e-12 * (1.0 + small.radius)
    if minimum < small.radius - slack:
        raise AssertionError("a sampled ball is smaller than the smallest ball")
    payload = {
        "system": prov,
        "x0": x0.tolist(),
        "smallest": {"center": small.center.tolist(), "radius": small.radius},
        "sampled": entries,
        "minimum_sampled_radius": minimum,
    }
    lines = [
        f"smallest ball: radius {small.radius!r}",
        f"  center norm {float(np.linalg.norm(small.center))!r}",
        f"sampled references: {len(entries)}; minimum radius {minimum!r}",
    ]
    for e in entries[: min(10, len(entries))]:
        lines.append(f"  {e['label']:>16}  {e['radius']!r}")
    text = "\n".join(lines)
    if write and cfg.out:
        _write(cfg.out, "balls", payload=payload)
    return text, payload

