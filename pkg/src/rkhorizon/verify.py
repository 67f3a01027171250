"""Bundled property checks, runnable from the CLI as ``rkhorizon verify``.

``fast`` finishes in seconds on small instances; ``full`` adds the larger
property sweeps and the two end-to-end synthetic experiments.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from . import bounds, linalg
from .generators import SyntheticSpec, build_synthetic, gen_reference_points
from .harness import ExperimentConfig, run_experiment
from .sampling import build_row_distribution, make_rng
from .solver import empirical_expectations, run_replicates, stack_traces


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class VerifyReport:
    level: str
    results: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.results)

    @property
    def failures(self):
        return [r.name for r in self.results if not r.passed]

    def render(self) -> str:
        lines = [f"{'PASS' if r.passed else 'FAIL'}  {r.name:<34} {r.detail}" for r in self.results]
        lines.append(f"{sum(r.passed for r in self.results)}/{len(self.results)} checks passed ({self.level})")
        return "\n".join(lines)


def _instance(m, n, r, beta, seed, reference="random", x0_mode="random", scale=1.0):
    sys = build_synthetic(SyntheticSpec(m, n, r, beta, seed))
    x0, xs = gen_reference_points(n, reference, sys, seed=seed, x0_mode=x0_mode, scale=scale)
    return sys, bounds.make_frame(sys, x0, xs)


def check_svd(count):
    g = make_rng(101)
    worst = 0.0
    for _ in range(count):
        m, n = (int(v) for v in g.integers(1, 51, size=2))
        r = int(g.integers(1, min(m, n) + 1))
        a = g.standard_normal((m, r)) @ g.standard_normal((r, n))
        f = linalg.svd(a)
        rec = np.linalg.norm(f.reconstruct() - a) / (1 + np.linalg.norm(a))
        orth = max(np.abs(f.u.T @ f.u - np.eye(f.rank)).max(), np.abs(f.v.T @ f.v - np.eye(f.rank)).max())
        if f.rank != r or np.any(np.diff(f.sigma) > 0) or np.any(f.sigma <= 0):
            return False, f"rank/ordering failure on {m}x{n} rank {r} (got {f.rank})"
        worst = max(worst, rec / 1e-10, orth / 1e-10)
    return worst <= 1.0, f"worst error / tolerance = {worst:.2e}"


def check_pinv(count):
    g = make_rng(202)
    worst = 0.0
    for _ in range(count):
        m, n = (int(v) for v in g.integers(1, 41, size=2))
        r = int(g.integers(1, min(m, n) + 1))
        a = g.standard_normal((m, r)) @ g.standard_normal((r, n))
        f = linalg.svd(a)
        p = linalg.pinv(f)
        scale = 1 + np.linalg.norm(a) * np.linalg.norm(p)
        errs = [
            np.linalg.norm(a @ p @ a - a) / (np.linalg.norm(a) * scale),
            np.linalg.norm(p @ a @ p - p) / (np.linalg.norm(p) * scale),
            np.linalg.norm((a @ p).T - a @ p) / scale,
            np.linalg.norm((p @ a).T - p @ a) / scale,
        ]
        x = g.standard_normal(n)
        errs.append(np.linalg.norm(linalg.min_norm_least_squares(f, a @ x) - linalg.project_row_space(f, x)) / (1 + np.linalg.norm(x)))
        worst = max(worst, max(errs) / 1e-10)
    return worst <= 1.0, f"worst error / tolerance = {worst:.2e}"


def check_projections(count):
    g = make_rng(303)
    worst = 0.0
    for _ in range(count):
        m, n = (int(v) for v in g.integers(1, 31, size=2))
        r = int(g.integers(1, min(m, n) + 1))
        a = g.standard_normal((m, r)) @ g.standard_normal((r, n))
        f = linalg.svd(a)
        x = g.standard_normal(n)
        x /= np.linalg.norm(x)
        pr, pn = linalg.project_row_space(f, x), linalg.project_null_space(f, x)
        errs = [
            np.linalg.norm(linalg.project_row_space(f, pr) - pr) / 1e-12,
            abs(pr @ pn) / 1e-12,
            np.linalg.norm(pr + pn - x) / 1e-12,
            np.linalg.norm(a @ pn) / (1e-10 * np.linalg.norm(a)),
        ]
        worst = max(worst, max(errs))
    return worst <= 1.0, f"worst error / tolerance = {worst:.2e}"


def check_sampling(samples):
    g = make_rng(404)
    worst_p = 1.0
    for t in range(5):
        m = int(g.integers(2, 101))
        a = g.standard_normal((m, 4)) * g.uniform(0.1, 3.0, size=(m, 1))
        dist = build_row_distribution(a)
        idx = dist.rows_from_uniforms(make_rng(1000 + t).random(samples))
        counts = np.bincount(idx, minlength=m)
        expected = dist.full_probabilities(m) * samples
        p = stats.chisquare(counts, expected).pvalue
        worst_p = min(worst_p, p)
    return worst_p > 1e-6, f"smallest chi-square p-value {worst_p:.3g}"


def _monte_carlo(sys, frame, runs, max_iters, checkpoints, seed):
    traces = run_replicates(sys, frame.x0, seed, runs, max_iters, checkpoints)
    return traces, empirical_expectations(traces, frame)


def check_dominations(instances, runs, mse_bound):
    """Returns results for the mse-domination, mean-domination, jensen and null-space checks."""
    worst = {"mse": -np.inf, "mean": -np.inf, "jensen": -np.inf, "null": 0.0}
    for sys, frame in instances:
        iters = int(math.ceil(5 * sys.ratio))
        cps = sorted(set(np.linspace(0, iters, 60).astype(int)))
        traces, exp = _monte_carlo(sys, frame, runs, iters, cps, 7)
        mse = mse_bound(sys, frame, cps)
        mean = bounds.mean_bound_curve(sys, frame, cps)
        worst["mse"] = max(worst["mse"], np.max(exp.mse - mse.values - 3 * exp.sq_error_stderr))
        worst["mean"] = max(worst["mean"], np.max(exp.mean_error - mean.values - 3 * exp.mean_error_stderr))
        worst["jensen"] = max(worst["jensen"], np.max(exp.mean_error - exp.rms_error - 1e-12))
        its = stack_traces(traces)
        drift = its - frame.x0
        nd = np.linalg.norm(drift - (drift @ sys.svd.v) @ sys.svd.v.T, axis=2).max()
        worst["null"] = max(worst["null"], nd / (1e-8 * (1 + np.linalg.norm(frame.x0))))
    return [
        CheckResult("mse-domination", worst["mse"] <= 0, f"max excess over bound+3SE {worst['mse']:.3g}"),
        CheckResult("mean-domination", worst["mean"] <= 0, f"max excess over bound+3SE {worst['mean']:.3g}"),
        CheckResult("jensen-ordering", worst["jensen"] <= 0, f"max mean-rms excess {worst['jensen']:.3g}"),
        CheckResult("null-space-conservation", worst["null"] <= 1, f"drift / tolerance {worst['null']:.3g}"),
    ]


def check_singular_coefficients(sys, frame, runs, ks):
    iters = max(ks)
    cps = sorted({0, *ks})
    traces, _ = _monte_carlo(sys, frame, runs, iters, cps, 11)
    its = stack_traces(traces) - frame.center
    worst = 0.0
    for j in sorted({1, max(1, sys.rank // 2), sys.rank}):
        samples = its @ sys.svd.v[:, j - 1]
        for k in ks:
            c = cps.index(k)
            se = samples[:, c].std(ddof=1) / math.sqrt(runs)
            expected = bounds.expected_singular_coefficient(sys, frame, j, k)
            floor = 1e-12 * (1 + np.linalg.norm(frame.x0 - frame.center))
            worst = max(worst, abs(samples[:, c].mean() - expected) / (3 * se + floor))
    return worst <= 1.0, f"max |MC - exact| / (3 SE) = {worst:.3f}"


def check_oracle(instances, kmax):
    worst = 0.0
    for sys, frame in instances:
        cps = list(range(0, kmax + 1, max(1, kmax // 25)))
        means = bounds.exact_mean_iterates(sys, frame, cps) - frame.center
        for j in range(1, sys.rank + 1):
            closed = bounds.expected_singular_coefficient(sys, frame, j, np.array(cps, float))
            worst = max(worst, np.max(np.abs(means @ sys.svd.v[:, j - 1] - closed)))
    return worst <= 1e-10, f"max abs difference {worst:.2e}"


def check_horizons(count):
    g = make_rng(505)
    worst = 0.0
    for t in range(count):
        m, n = (int(v) for v in g.integers(2, 31, size=2))
        r = int(g.integers(1, min(m, n) + 1))
        sys, frame = _instance(m, n, r, 0.0 if r == m else float(g.uniform(0, 5)), 600 + t)
        mse = bounds.mse_bound_curve(sys, frame, [0])
        mean = bounds.mean_bound_curve(sys, frame, [0])
        if mean.horizon > 0:
            worst = max(worst, abs(mse.horizon - mean.horizon**2) / mean.horizon**2)
    return worst <= 1e-12, f"max relative difference {worst:.2e}"


def check_minimizing_pair(count):
    g = make_rng(606)
    worst = 0.0
    for t in range(count):
        m, n = (int(v) for v in g.integers(3, 25, size=2))
        r = int(g.integers(1, min(m, n)))
        sys, _ = _instance(m, n, r, float(g.uniform(0.5, 3.0)), 700 + t)
        target = np.linalg.norm(sys.residual(sys.x_ls))
        for _ in range(3):
            y = linalg.project_null_space(sys.svd, g.standard_normal(n))
            a_hat, b_hat = bounds.construct_minimizing_pair(sys, y)
            x_hat = linalg.min_norm_least_squares(linalg.svd(a_hat), b_hat)
            lhs = np.linalg.norm((sys.a - a_hat) @ x_hat - (sys.b - b_hat))
            worst = max(
                worst,
                abs(lhs - target) / (1e-10 * max(target, 1.0)),
                np.linalg.norm(x_hat - sys.x_ls - y) / (1e-10 * max(1.0, np.linalg.norm(sys.x_ls + y))),
            )
    return worst <= 1.0, f"worst error / tolerance = {worst:.2e}"


def check_smallest_ball(count, samples):
    g = make_rng(707)
    worst = -np.inf
    for t in range(count):
        sys, frame = _instance(20, 8, 5, 2.0, 800 + t)
        small = bounds.smallest_ball(sys, frame.x0)
        for _ in range(samples):
            xs = sys.x_ls + g.standard_normal(8) * g.uniform(0.01, 3)
            r = bounds.ball_for_reference(sys, bounds.make_frame(sys, frame.x0, xs)).radius
            worst = max(worst, small.radius - r - 1e-12)
    return worst <= 0, f"max (smallest - sampled) {worst:.2e}"


def check_scale_covariance(instances):
    worst = 0.0
    for sys, frame in instances:
        cps = [0, 5, 50, 500]
        big = sys.scaled(3.7)
        fbig = bounds.make_frame(big, frame.x0, frame.x_star)
        pairs = [
            (bounds.mse_bound_curve(sys, frame, cps).values, bounds.mse_bound_curve(big, fbig, cps).values),
            (bounds.mean_bound_curve(sys, frame, cps).values, bounds.mean_bound_curve(big, fbig, cps).values),
            (bounds.ball_for_reference(sys, frame).radius, bounds.ball_for_reference(big, fbig).radius),
            (bounds.smallest_ball(sys, frame.x0).center, bounds.smallest_ball(big, frame.x0).center),
        ]
        for a, b in pairs:
            a, b = np.atleast_1d(a), np.atleast_1d(b)
            worst = max(worst, np.max(np.abs(a - b) / np.maximum(np.abs(a), 1e-300)))
    return worst <= 1e-9, f"max relative change {worst:.2e}"


def check_determinism():
    cfg = dict(
        source={"kind": "synthetic", "m": 30, "n": 12, "r": 6, "beta": 2.0, "seed": 3},
        runs=4, max_iters=200, track=[1, 6],
    )
    first = run_experiment(ExperimentConfig.from_dict(cfg), write=False).to_csv()
    second = run_experiment(ExperimentConfig.from_dict(cfg), write=False).to_csv()
    return first == second, f"{len(first)} bytes"


def check_end_to_end(source, track, runs):
    cfg = ExperimentConfig(source=source, runs=runs, track=track, scale=10.0)
    res = run_experiment(cfg, write=False)
    exp = res.expectations
    ok = bool(np.all(exp.mse <= res.mse_bound.values + 3 * exp.sq_error_stderr))
    ok &= bool(np.all(exp.mean_error <= res.mean_bound.values + 3 * exp.mean_error_stderr))
    dev = 0.0
    for j, co in res.coefficients.items():
        dev = max(dev, np.max(np.abs(co["empirical"] - co["expected"]) / (3 * co["stderr"] + 1e-12)))
    return ok, f"bounds dominate={ok}; max coefficient deviation {dev:.2f} x 3SE (20-run means)"


def verify_suite(level="fast", mse_bound=bounds.mse_bound_curve) -> VerifyReport:
    """Run the bundled checks; ``mse_bound`` is injectable for negative controls."""
    if level not in ("fast", "full"):
        raise ValueError("level must be 'fast' or 'full'")
    full = level == "full"
    report = VerifyReport(level)

    def record(name, fn, *args):
        try:
            out = fn(*args)
        except Exception as exc:  # reported, not raised
            report.results.append(CheckResult(name, False, f"error: {exc!r}"))
            return
        if isinstance(out, list):
            report.results.extend(out)
        else:
            report.results.append(CheckResult(name, bool(out[0]), out[1]))

    n_mat = 200 if full else 40
    record("svd-invariants", check_svd, n_mat)
    record("moore-penrose", check_pinv, n_mat)
    record("projection-identities", check_projections, n_mat)
    record("sampling-chi-square", check_sampling, 100_000 if full else 20_000)

    dom = [_instance(60, 30, 15, 5.0, 1), _instance(40, 20, 20, 50.0, 2, scale=5.0)]
    if full:
        dom += [_instance(200, 100, 60, beta, 3, scale=5.0) for beta in (10.0, 10000.0)]
    record("dominations", check_dominations, dom, 20, mse_bound)

    sys, frame = _instance(60, 20, 10, 5.0, 4)
    record("singular-coefficient-equality", check_singular_coefficients, sys, frame,
           10_000 if full else 2_000, [1, 10, 100, 1000] if full else [1, 10, 100])
    oracle = [_instance(m, n, r, 1.0, 20 + i) for i, (m, n, r) in enumerate([(50, 30, 12), (30, 30, 29), (20, 10, 10)])]
    record("oracle-agreement", check_oracle, oracle, 500)
    record("horizon-consistency", check_horizons, 100 if full else 30)
    record("minimizing-pair", check_minimizing_pair, 50 if full else 10)
    record("smallest-ball-optimality", check_smallest_ball, 10 if full else 3, 1000 if full else 200)
    record("scale-covariance", check_scale_covariance, oracle)
    record("determinism", check_determinism)
    if full:
        record("synthetic-mse-end-to-end", check_end_to_end,
               {"kind": "synthetic", "m": 1000, "n": 500, "r": 300, "beta": 10.0, "seed": 0}, [], 20)
        record("synthetic-coefficient-end-to-end", check_end_to_end,
               {"kind": "synthetic", "m": 1000, "n": 200, "r": 100, "beta": 10.0, "seed": 0}, [1, 50, 100], 20)
    return report
