import math

import numpy as np
import pytest
from scipy.special import ndtri

from lrroc.data_model import TwoSampleData
from lrroc.errors import TooManyFailures, ZeroTruth
from lrroc.eval_sim import (
    CATALOG,
    Scenario,
    bootstrap_ci,
    generate,
    get_scenario,
    l1_l2_distance,
    rb_mse,
    run_scenario,
    true_summary,
)
from lrroc._random import stream


class TestScenarios:
    def test_catalog_names(self):
        fams = {"normal", "gamma", "beta"}
        assert set(CATALOG) == {f"{f}-{j}" for f in fams for j in ("0.3", "0.5", "0.7")}

    def test_unknown(self):
        with pytest.raises(KeyError):
            get_scenario("normal-0.9")

    def test_invalid(self):
        with pytest.raises(ValueError):
            Scenario("normal", (0.0, -1.0), (1.0, 1.0))
        with pytest.raises(ValueError):
            Scenario("gamma", (0.0, 1.0), (1.0, 1.0))

    def test_normal_truth_closed_form(self):
        t = true_summary(get_scenario("normal-0.5"))
        assert t.cutoff == pytest.approx((10 + 11.349) / 2, abs=1e-12)
        assert t.youden == pytest.approx(2 * 0.5 * (1 + math.erf(0.6745 / math.sqrt(2))) - 1, abs=1e-9)
        assert ndtri(0.75) == pytest.approx(0.6745, abs=1e-4)

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_truth_consistent(self, name):
        sc = get_scenario(name)
        t = true_summary(sc)
        d0, d1 = sc.dist(0), sc.dist(1)
        assert d0.pdf(t.cutoff) == pytest.approx(d1.pdf(t.cutoff), rel=1e-8)
        assert float(t.youden) == pytest.approx(float(name.split("-")[1]), abs=0.0015)
        # AUC as the integral of the true ROC
        s = (np.arange(20000) + 0.5) / 20000
        assert np.mean(t.roc(s)) == pytest.approx(t.auc, abs=1e-5)
        assert t.roc(0.0) == pytest.approx(0.0) and t.roc(1.0) == pytest.approx(1.0)


class TestGenerate:
    def test_deterministic(self):
        sc = get_scenario("gamma-0.5", 30, 20)
        a, b = generate(sc, 3, 7), generate(sc, 3, 7)
        assert a.healthy.tobytes() == b.healthy.tobytes()
        assert a.diseased.tobytes() == b.diseased.tobytes()
        c = generate(sc, 3, 8)
        assert not np.array_equal(a.healthy, c.healthy)
        assert (a.n0, a.n1) == (30, 20)

    def test_streams_independent_of_order(self):
        x = stream(5, 2).standard_normal(3)
        stream(5, 1).standard_normal(10)
        np.testing.assert_array_equal(stream(5, 2).standard_normal(3), x)

    @pytest.mark.parametrize("name", sorted(CATALOG))
    def test_moments(self, name):
        big = 10**6
        sc = get_scenario(name, big, big)
        data = generate(sc, 2024, 0)
        for g, sample in ((0, data.healthy), (1, data.diseased)):
            d = sc.dist(g)
            assert sample.mean() == pytest.approx(d.mean(), rel=0.01)
            assert sample.var() == pytest.approx(d.var(), rel=0.01)

    def test_normal_and_gamma_means(self):
        sc = Scenario("normal", (10.0, 1.0), (10.0, 1.0), 10**6, 2)
        assert abs(generate(sc, 1, 0).healthy.mean() - 10) <= 0.01
        sc = Scenario("gamma", (2.0, 1.0), (2.0, 1.0), 10**6, 2)
        assert abs(generate(sc, 1, 0).healthy.mean() - 2) <= 0.02


class TestMetrics:
    def test_identical(self):
        f = lambda s: np.sqrt(s)
        assert l1_l2_distance(f, f) == (0.0, 0.0)

    def test_constant_shift(self):
        l1, l2 = l1_l2_distance(lambda s: s + 0.1, lambda s: s)
        assert l1 == pytest.approx(0.1) and l2 == pytest.approx(0.1)

    def test_staircase_two_grids(self, rng):
        from lrroc.baselines import ecdf_summary

        summ = ecdf_summary(TwoSampleData(rng.normal(0, 1, 40), rng.normal(1, 1, 40)))
        true = get_scenario("normal-0.5").dist
        ref = lambda s: 1 - true(1).cdf(true(0).ppf(1 - s))
        a = l1_l2_distance(summ.roc, ref, 2001)
        b = l1_l2_distance(summ.roc, ref, 40001)
        assert abs(a[0] - b[0]) <= 1e-3 and abs(a[1] - b[1]) <= 1e-3
        assert 0 <= a[0] <= 1 and 0 <= a[1] <= 1 and a[1] >= a[0] - 1e-9

    def test_rb_mse(self):
        assert rb_mse([2.0, 2.0], 2.0) == (0.0, 0.0)
        assert rb_mse([1.1], 1.0)[0] == pytest.approx(10.0)
        rb, mse = rb_mse([3.5, 2.5], 3.0)
        assert rb == pytest.approx(0.0, abs=1e-12) and mse == pytest.approx(0.25)
        with pytest.raises(ZeroTruth):
            rb_mse([1.0], 0.0)


class TestRunScenario:
    def test_single_rep(self):
        sc = get_scenario("normal-0.5", 50, 50)
        (rep,) = run_scenario(sc, ["ecdf"], reps=1, seed=3)
        assert rep.replications == 1 and rep.method == "ecdf" and rep.failures == 0
        assert all(v >= 0 for v in rep.mse_scaled.values())
        assert set(rep.row()) >= {"l1_mean", "auc_rb_percent", "cutoff_mse_x1000"}

    def test_workers_and_pairing(self):
        sc = get_scenario("beta-0.5", 40, 30)
        a = run_scenario(sc, ["bp", "ecdf"], reps=4, seed=11, workers=1)
        b = run_scenario(sc, ["bp", "ecdf"], reps=4, seed=11, workers=2)
        assert a == b
        assert [r.method for r in a] == ["bp", "ecdf"]
        assert sum(a[0].order_counts.values()) == 4

    def test_bad_args(self):
        sc = get_scenario("normal-0.5")
        with pytest.raises(ValueError):
            run_scenario(sc, ["ecdf"], reps=0)
        with pytest.raises(ValueError):
            run_scenario(sc, ["svm"], reps=1)

    def test_failures_counted(self):
        # Box-Cox cannot handle negative draws; every replicate fails
        sc = Scenario("normal", (0.0, 1.0), (1.0, 1.0), 20, 20, "neg")
        (rep,) = run_scenario(sc, ["boxcox"], reps=2, seed=0)
        assert rep.failures == 2 and rep.replications == 0 and math.isnan(rep.l1_mean)


class TestBootstrapCI:
    def test_percentiles(self, rng):
        data = TwoSampleData(rng.normal(0, 1, 40), rng.normal(1, 1, 40))
        out = bootstrap_ci(data, ("auc", "youden", "cutoff"), "ecdf", B=200, level=0.9, seed=4)
        for stat, ci in out.items():
            assert ci.lower <= ci.upper and ci.reps == 200 and ci.level == 0.9
        again = bootstrap_ci(data, "auc", "ecdf", B=200, level=0.9, seed=4, workers=2)
        assert again["auc"] == out["auc"]

    def test_matches_manual_quantiles(self, rng):
        from lrroc.baselines import ecdf_summary

        data = TwoSampleData(rng.normal(0, 1, 15), rng.normal(1, 1, 15))
        out = bootstrap_ci(data, "auc", "ecdf", B=40, level=0.95, seed=1)["auc"]
        vals = []
        for b in range(40):
            r = stream(1, b)
            boot = TwoSampleData(r.choice(data.healthy, 15), r.choice(data.diseased, 15))
            vals.append(ecdf_summary(boot).auc)
        lo, hi = np.quantile(vals, [0.025, 0.975])
        assert (out.lower, out.upper) == (lo, hi)

    def test_constant_statistic(self):
        data = TwoSampleData([1.0, 1.0, 1.0], [5.0, 5.0, 5.0])
        ci = bootstrap_ci(data, "auc", "ecdf", B=40, level=0.95, seed=0)["auc"]
        assert ci.lower == ci.upper == ci.point == 1.0

    def test_preconditions(self, rng):
        data = TwoSampleData(rng.normal(0, 1, 10), rng.normal(1, 1, 10))
        with pytest.raises(ValueError):
            bootstrap_ci(data, "auc", "ecdf", B=39, level=0.95)
        with pytest.raises(ValueError):
            bootstrap_ci(data, "auc", "ecdf", B=100, level=1.0)

    def test_too_many_failures(self):
        # resamples of a two-valued group often have zero spread
        data = TwoSampleData([1.0, 2.0], [3.0, 4.0])
        with pytest.raises(TooManyFailures):
            bootstrap_ci(data, "auc", "kernel", B=40, level=0.95, seed=0)
