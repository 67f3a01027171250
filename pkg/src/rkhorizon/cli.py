"""Command line entry point: ``rkhorizon <subcommand> ...``."""
from __future__ import annotations

import argparse
import csv
import json
import sys as _sys
from pathlib import Path

import numpy as np

from . import bounds
from .errors import RKError
from .generators import SyntheticSpec, build_synthetic
from .harness import (
    ExperimentConfig,
    ball_report,
    build_frame,
    build_system,
    resolve_checkpoints,
    resolve_iters,
    run_experiment,
)
from .ingest import parse_libsvm, summarize, summary_stats
from .solver import RkRunConfig, run_rk
from .systemfile import save_system
from .verify import verify_suite


def _common(p):
    p.add_argument("--config", help="JSON file mirroring ExperimentConfig")
    p.add_argument("--seed", type=int, help="base seed for RK runs (and reference points)")
    p.add_argument("--runs", type=int)
    p.add_argument("--iters", type=int, help="iterations per run")
    p.add_argument("--out", help="output directory")


def _system_args(p):
    p.add_argument("--system", help="system header written by `generate`")
    p.add_argument("--libsvm", help="LIBSVM dataset path")
    p.add_argument("--reference", help="random | lstsq | singular_vector:j")
    p.add_argument("--x0-mode", help="random | zero | in_row_space")
    p.add_argument("--homogeneous", action="store_true", help="replace b by 0")


def _config(args) -> ExperimentConfig:
    d = json.loads(Path(args.config).read_text()) if getattr(args, "config", None) else {}
    if getattr(args, "system", None):
        d["source"] = {"kind": "file", "path": args.system}
    if getattr(args, "libsvm", None):
        d["source"] = {"kind": "libsvm", "path": args.libsvm}
    for attr, key in [("seed", "base_seed"), ("runs", "runs"), ("iters", "max_iters"), ("out", "out"),
                      ("reference", "reference"), ("x0_mode", "x0_mode")]:
        val = getattr(args, attr, None)
        if val is not None:
            d[key] = val
    if getattr(args, "homogeneous", False):
        d["homogeneous"] = True
    if getattr(args, "track", None):
        d["track"] = args.track
    return ExperimentConfig.from_dict(d)


def cmd_generate(args):
    spec = SyntheticSpec(args.m, args.n, args.rank, args.beta, args.seed)
    sys = build_synthetic(spec)
    out = Path(args.out or ".") / args.name
    path = save_system(out, sys.a, sys.b, {"generator": "low_rank_gaussian", **spec.__dict__})
    print(f"wrote {path} (m={spec.m}, n={spec.n}, rank={sys.rank})")


def cmd_ingest(args):
    ds = parse_libsvm(args.path, args.dim, args.max_rows)
    print(summarize(ds))
    if args.out:
        out = Path(args.out)
        save_system(out / ds.name, ds.a, ds.b, {"libsvm": str(args.path)})
        (out / f"{ds.name}_summary.json").write_text(json.dumps(summary_stats(ds), indent=2, sort_keys=True) + "\n")


def cmd_solve(args):
    cfg = _config(args)
    sys, _ = build_system(cfg)
    frame = build_frame(cfg, sys)
    iters = resolve_iters(cfg, sys)
    run_cfg = RkRunConfig(seed=cfg.base_seed, max_iters=iters, x0=frame.x0,
                          checkpoints=resolve_checkpoints(cfg, iters), record_rows=args.rows)
    trace = run_rk(sys, run_cfg)
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    with (out / "trace.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration"] + [f"x{i}" for i in range(sys.shape[1])])
        for k, x in zip(trace.checkpoints, trace.iterates):
            w.writerow([k] + [repr(float(v)) for v in x])
    if args.rows:
        np.savetxt(out / "rows.txt", trace.selected_rows, fmt="%d")
    print(f"wrote {out / 'trace.csv'} ({len(trace.checkpoints)} checkpoints, {iters} iterations)")


def cmd_bounds(args):
    cfg = _config(args)
    sys, _ = build_system(cfg)
    frame = build_frame(cfg, sys)
    iters = resolve_iters(cfg, sys)
    cps = resolve_checkpoints(cfg, iters)
    mse = bounds.mse_bound_curve(sys, frame, cps)
    mean = bounds.mean_bound_curve(sys, frame, cps)
    out = Path(cfg.out or ".")
    out.mkdir(parents=True, exist_ok=True)
    with (out / "bounds.csv").open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["iteration", "mse_bound", "sqrt_mse_bound", "mean_bound", "mse_horizon", "mean_horizon"])
        for c, k in enumerate(cps):
            w.writerow([k, repr(float(mse.values[c])), repr(float(np.sqrt(mse.values[c]))),
                        repr(float(mean.values[c])), repr(mse.horizon), repr(mean.horizon)])
    print(f"horizon (mean) {mean.horizon!r}; ratio {sys.ratio:.6g}; wrote {out / 'bounds.csv'}")


def cmd_experiment(args):
    cfg = _config(args)
    if cfg.out is None:
        cfg.out = "."
    res = run_experiment(cfg)
    s = res.summary
    last = res.expectations
    print(f"m={s['m']} n={s['n']} rank={s['rank']} ratio={s['ratio']:.6g} runs={last.run_count}")
    print(f"final rms error {last.rms_error[-1]:.6g} (sqrt bound {np.sqrt(res.mse_bound.values[-1]):.6g}); "
          f"final mean error {last.mean_error[-1]:.6g} (bound {res.mean_bound.values[-1]:.6g})")
    print(f"wrote {Path(cfg.out) / 'experiment.csv'} and experiment.json")


def cmd_balls(args):
    cfg = _config(args)
    text, _ = ball_report(cfg)
    print(text)


def cmd_verify(args):
    report = verify_suite(args.level)
    print(report.render())
    return 0 if report.passed else 1


def build_parser():
    p = argparse.ArgumentParser(prog="rkhorizon", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic low-rank system")
    g.add_argument("--m", type=int, default=200)
    g.add_argument("--n", type=int, default=100)
    g.add_argument("--rank", type=int, default=60)
    g.add_argument("--beta", type=float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--name", default="system")
    g.add_argument("--out")
    g.set_defaults(func=cmd_generate)

    i = sub.add_parser("ingest", help="summarize a LIBSVM dataset")
    i.add_argument("path")
    i.add_argument("--dim", type=int)
    i.add_argument("--max-rows", type=int)
    i.add_argument("--out")
    i.set_defaults(func=cmd_ingest)

    s = sub.add_parser("solve", help="dump one RK trace")
    _common(s)
    _system_args(s)
    s.add_argument("--rows", action="store_true", help="also log every selected row")
    s.set_defaults(func=cmd_solve)

    b = sub.add_parser("bounds", help="evaluate bound curves")
    _common(b)
    _system_args(b)
    b.set_defaults(func=cmd_bounds)

    e = sub.add_parser("experiment", help="Monte Carlo runs plus bounds")
    _common(e)
    _system_args(e)
    e.add_argument("--track", type=int, nargs="*", help="singular indices to track (1-based)")
    e.set_defaults(func=cmd_experiment)

    bl = sub.add_parser("balls", help="smallest-ball report")
    _common(bl)
    _system_args(bl)
    bl.set_defaults(func=cmd_balls)

    v = sub.add_parser("verify", help="run the bundled property checks")
    v.add_argument("--level", choices=["fast", "full"], default="fast")
    v.set_defaults(func=cmd_verify)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        code = args.func(args)
    except (RKError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=_sys.stderr)
        return 2
    return code or 0


if __name__ == "__main__":
    raise SystemExit(main())
