"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` (about ten minutes on
one core); the lines are repeated in the terminal summary.
"""

import json
import math
import os
import subprocess
import sys
import time
import warnings

import numpy as np
import pytest

from lrroc.baselines import ecdf_summary
from lrroc.bernstein_basis import build_design
from lrroc.bp_estimator import fit_bp, gof_bootstrap
from lrroc.constrained_logit import (
    CoefficientVector,
    fit_constrained,
    logit,
    loglik_gradient,
    select_order_bic,
)
from lrroc.data_model import SINGLE, TwoSampleData, make_transform, pool_and_count
from lrroc.eval_sim import CATALOG, generate, get_scenario, run_scenario, true_summary

from conftest import ACCEPTANCE_LINES

TABLE_SEED = 20240611


def record(number, title, ok, detail):
    line = f"ACCEPTANCE {number} {'PASS' if ok else 'FAIL'}: {title} | {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def _mixed_datasets(count, seed):
    rng = np.random.default_rng(seed)
    names = sorted(CATALOG)
    for i in range(count):
        sc = get_scenario(names[i % len(names)], int(rng.integers(20, 401)), int(rng.integers(20, 401)))
        yield generate(sc, seed, i)


@pytest.fixture(scope="module")
def mixed_fits():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return [fit_bp(d) for d in _mixed_datasets(200, 101)]


def test_criterion_01_empirical_likelihood_identities(mixed_fits):
    worst_sum, worst_phi, converged = 0.0, 0.0, 0
    for fit in mixed_fits:
        s = fit.support
        worst_phi = max(worst_phi, float(np.max(np.abs(fit.phi - (s.a + s.b) / s.n))))
        if fit.report.converged:
            converged += 1
            worst_sum = max(worst_sum, abs(float(fit.phi @ fit.theta) - fit.lam))
    ok = converged == len(mixed_fits) and worst_sum <= 1e-6 and worst_phi == 0.0
    record(1, "sum phi*theta = lambda and phi = (a+b)/n", ok,
           f"converged {converged}/200, max |sum-lambda| {worst_sum:.2e}, max phi err {worst_phi:.1e}")


def _grid_oracle(support, design, lam):
    a, b = support.a, support.b
    x = design.matrix[:, 0]
    off = logit(lam)

    def ll(a0, a1):
        eta = off + a0[..., None] + a1[..., None] * x
        return np.sum(-b * np.logaddexp(0, -eta) - a * np.logaddexp(0, eta), axis=-1)

    # concave objective: coarse pass over the whole box, then step 1e-3 near the best cell
    g0, g1 = np.meshgrid(np.arange(-10, 10.0001, 0.02), np.arange(0, 10.0001, 0.02), indexing="ij")
    vals = ll(g0, g1)
    i, j = np.unravel_index(np.argmax(vals), vals.shape)
    c0, c1 = g0[i, j], g1[i, j]
    f0 = np.arange(max(-10, c0 - 0.04), min(10, c0 + 0.04) + 1e-9, 1e-3)
    f1 = np.arange(max(0, c1 - 0.04), min(10, c1 + 0.04) + 1e-9, 1e-3)
    h0, h1 = np.meshgrid(f0, f1, indexing="ij")
    return max(float(vals.max()), float(ll(h0, h1).max()))


def test_criterion_02_solver_matches_grid_oracle():
    rng = np.random.default_rng(202)
    gaps, solver_time = [], 0.0
    for _ in range(50):
        n0, n1 = int(rng.integers(2, 11)), int(rng.integers(2, 11))
        data = TwoSampleData(np.round(rng.normal(0, 1, n0), 1), np.round(rng.normal(0.8, 1, n1), 1))
        s = pool_and_count(data)
        if s.m < 2:
            data = TwoSampleData(np.append(data.healthy, 5.0), data.diseased)
            s = pool_and_count(data)
        design = build_design(s, make_transform(s, SINGLE), 1)
        t = time.perf_counter()
        rep = fit_constrained(design, s, data.lam)
        solver_time += time.perf_counter() - t
        gaps.append(rep.loglik - _grid_oracle(s, design, data.lam))
    worst = min(gaps)
    ok = worst >= -1e-3 and solver_time < 10.0
    record(2, "N=1 single-basis fits vs grid search", ok,
           f"min(solver - oracle) {worst:.2e}, solver time {solver_time:.2f}s")


def test_criterion_03_gradient_finite_differences():
    rng = np.random.default_rng(303)
    worst = 0.0
    for k in range(50):
        data = next(_mixed_datasets(1, 1000 + k))
        s = pool_and_count(data)
        N = int(rng.integers(1, 5))
        design = build_design(s, make_transform(s), N)
        coef = np.concatenate([[rng.normal(0, 1)], rng.uniform(0, 2, design.p)])
        X = np.column_stack([np.ones(s.m), design.matrix])

        def f(c):
            eta = logit(data.lam) + X @ c
            return float(np.sum(-s.b * np.logaddexp(0, -eta) - s.a * np.logaddexp(0, eta)))

        g = loglik_gradient(CoefficientVector.from_array(coef), design, s, data.lam)
        fd = np.array([(f(coef + 1e-6 * e) - f(coef - 1e-6 * e)) / 2e-6 for e in np.eye(coef.size)])
        worst = max(worst, float(np.linalg.norm(fd - g) / np.linalg.norm(g)))
    record(3, "analytic gradient vs central differences", worst <= 1e-6, f"max relative error {worst:.2e}")


def test_criterion_04_shape_properties(mixed_fits):
    bad = []
    for k, fit in enumerate(mixed_fits):
        from lrroc.bp_estimator import theta_hat

        grid = np.linspace(fit.spec.t_min, fit.spec.t_max, 1001)
        th = theta_hat(fit, grid)
        F0, F1 = fit.cdfs.F0, fit.cdfs.F1
        pos = fit.p0 > 0
        ratio = fit.p1[pos] / fit.p0[pos]
        checks = (
            np.all(np.diff(th) >= 0),
            np.all(F1 <= F0 + 1e-10),
            np.all(np.diff(ratio) >= -1e-9 * np.maximum(1, ratio[1:])),
            abs(fit.p0.sum() - 1) <= 1e-8 and abs(fit.p1.sum() - 1) <= 1e-8,
        )
        if not all(checks):
            bad.append((k, checks))
    record(4, "monotone theta, F1 <= F0, concave vertices, unit masses", not bad,
           f"{200 - len(bad)}/200 fits satisfy all four" + (f"; first failure {bad[0]}" if bad else ""))


@pytest.fixture(scope="module")
def table_run():
    sc = get_scenario("normal-0.5", 100, 100)
    t = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        reports = run_scenario(sc, ["bp", "ecdf", "kernel", "boxcox"], reps=1000, seed=TABLE_SEED)
    elapsed = time.perf_counter() - t
    return {r.method: r for r in reports}, elapsed


def _within(x, centre, tol):
    return abs(x - centre) <= tol


def test_criterion_05_roc_distances(table_run):
    r, elapsed = table_run
    vals = {m: r[m].l1_mean for m in ("bp", "ecdf", "kernel")}
    ok = (
        _within(vals["bp"], 0.023, 0.003)
        and _within(vals["ecdf"], 0.032, 0.003)
        and _within(vals["kernel"], 0.029, 0.004)
        and _within(r["bp"].l2_mean, 0.029, 0.004)
        and elapsed <= 600
    )
    record(5, "mean L1/L2 ROC distances, normal J=0.5, (100,100), 1000 reps", ok,
           f"L1 bp {vals['bp']:.4f} ecdf {vals['ecdf']:.4f} kernel {vals['kernel']:.4f}; "
           f"L2 bp {r['bp'].l2_mean:.4f}; run {elapsed:.0f}s")


def test_criterion_06_auc(table_run):
    r, _ = table_run
    bp_rb, k_rb = r["bp"].rb_percent["auc"], r["kernel"].rb_percent["auc"]
    bp_mse = r["bp"].mse_scaled["auc"]
    ok = abs(bp_rb) <= 0.5 and -2.5 <= k_rb <= -0.8 and _within(bp_mse, 0.75, 0.15)
    record(6, "AUC relative bias and MSE", ok,
           f"bp RB {bp_rb:+.2f}% MSEx1000 {bp_mse:.3f}; kernel RB {k_rb:+.2f}%")


def test_criterion_07_youden(table_run):
    r, _ = table_run
    e_rb, bp_rb = r["ecdf"].rb_percent["youden"], r["bp"].rb_percent["youden"]
    bp_mse = r["bp"].mse_scaled["youden"]
    ok = 5.0 <= e_rb <= 10.0 and abs(bp_rb) <= 1.5 and _within(bp_mse, 2.43, 0.5)
    record(7, "Youden index relative bias and MSE", ok,
           f"ecdf RB {e_rb:+.2f}%; bp RB {bp_rb:+.2f}% MSEx1000 {bp_mse:.3f}")


def test_criterion_08_cutoff(table_run):
    r, _ = table_run
    bp, ecdf = r["bp"].mse_scaled["cutoff"], r["ecdf"].mse_scaled["cutoff"]
    ok = _within(bp, 5.70, 1.5) and _within(ecdf, 56.55, 12) and ecdf / bp >= 5
    record(8, "optimal cutoff MSE", ok, f"MSEx1000 bp {bp:.2f} ecdf {ecdf:.2f} ratio {ecdf / bp:.1f}")


def test_criterion_09_bic_picks_order_one():
    sc = get_scenario("normal-0.5", 100, 100)
    ones = 0
    for i in range(500):
        data = generate(sc, 909, i)
        s = pool_and_count(data)
        ones += select_order_bic(s, make_transform(s), data.lam).chosen == 1
    record(9, "BIC selects N=1 under the normal J=0.5 design", ones >= 475, f"N=1 in {ones}/500")


def test_criterion_10_population_auc():
    expected = {
        "normal-0.3": 0.707, "normal-0.5": 0.830, "normal-0.7": 0.929,
        "gamma-0.3": 0.708, "gamma-0.5": 0.830, "gamma-0.7": 0.929,
        "beta-0.3": 0.702, "beta-0.5": 0.822, "beta-0.7": 0.919,
    }
    got = {k: true_summary(get_scenario(k)).auc for k in expected}
    ok = all(round(got[k], 3) == v for k, v in expected.items())
    record(10, "population AUC of every scenario", ok,
           ", ".join(f"{k} {got[k]:.7f}" + ("" if round(got[k], 3) == v else f" (printed {v})")
                     for k, v in expected.items()))


def test_criterion_11_ecdf_auc_is_pair_count():
    rng = np.random.default_rng(1111)
    mismatches = 0
    for _ in range(100):
        x = rng.normal(0, 1, int(rng.integers(2, 200)))
        y = rng.normal(rng.uniform(-1, 2), 1, int(rng.integers(2, 200)))
        count = int(np.sum(y[None, :] > x[:, None]))
        mismatches += ecdf_summary(TwoSampleData(x, y)).auc != count / (x.size * y.size)
    record(11, "ECDF AUC equals the Mann-Whitney pair count", mismatches == 0,
           f"{100 - mismatches}/100 exact")


def _sup_error_F0(fit, dist0):
    t = fit.support.t
    F = fit.cdfs.F0
    true = dist0.cdf(t)
    left = np.concatenate([[0.0], F[:-1]])
    return float(max(np.max(np.abs(F - true)), np.max(np.abs(left - true))))


def test_criterion_12_consistency_trend():
    table1 = [k for k in sorted(CATALOG) if not k.startswith("beta")]
    parts, ok = [], True
    for name in table1:
        med = {}
        for n in (50, 400):
            sc = get_scenario(name, n, n)
            errs = [_sup_error_F0(fit_bp(generate(sc, 1212, i)), sc.dist(0)) for i in range(200)]
            med[n] = float(np.median(errs))
        ok &= med[400] < med[50]
        parts.append(f"{name} {med[50]:.4f}->{med[400]:.4f}")
    record(12, "median sup|F0_hat - F0| shrinks from (50,50) to (400,400)", ok, "; ".join(parts))


def test_criterion_13_gof_calibration():
    sc = get_scenario("normal-0.5", 100, 100)
    rejects = 0
    for i in range(200):
        res = gof_bootstrap(generate(sc, 1313, i), B=200, seed=i)
        rejects += res.p_value <= 0.05
    rate = rejects / 200
    record(13, "goodness-of-fit test size at level 0.05 under the null", rate <= 0.08,
           f"rejection rate {rate:.3f} ({rejects}/200)")


def _cli(args, threads):
    env = dict(os.environ)
    env.pop("LRROC_THREADS", None)
    if threads is not None:
        env["LRROC_THREADS"] = threads
    out = subprocess.run([sys.executable, "-m", "lrroc.cli", *args], env=env,
                         capture_output=True, check=True)
    return out.stdout


def test_criterion_14_cli_determinism(tmp_path):
    data = generate(get_scenario("gamma-0.5", 60, 50), 14, 0)
    path = tmp_path / "d.csv"
    from lrroc.cli import write_records

    path.write_text(write_records(np.r_[data.healthy, data.diseased], [0] * 60 + [1] * 50))
    commands = [
        ["simulate", "--scenario", "normal-0.5", "--reps", "6", "--seed", "7", "--n0", "50", "--n1", "50"],
        ["simulate", "--scenario", "beta-0.3", "--reps", "4", "--seed", "3", "--format", "csv",
         "--precision", "full"],
        ["gof", "--input", str(path), "--bootstrap", "40", "--seed", "11"],
    ]
    same = 0
    for args in commands:
        outs = {_cli(args, th) for th in (None, "1", "2", "0", None)}
        same += len(outs) == 1
    record(14, "simulate/gof output identical across runs and LRROC_THREADS", same == len(commands),
           f"{same}/{len(commands)} commands byte-identical over 5 runs each")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
