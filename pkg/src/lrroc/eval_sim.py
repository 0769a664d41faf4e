"""Simulation scenarios, population truth, error metrics and bootstrap CIs.

Replicate ``r`` of a run with seed ``s`` draws its data from the keyed stream
``(s, r)``, so a run's output does not depend on how replicates are spread
over workers. Aggregates are summed in replicate order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Iterable, Optional, Sequence

import numpy as np
from scipy import integrate, optimize, stats

from ._parallel import pmap
from ._random import stream
from .baselines import METHODS, binormal_cutoff
from .bp_estimator import RocSummary, fit_bp, summarize
from .data_model import TwoSampleData
from .errors import LrrocError, TooManyFailures, ZeroTruth

ALL_METHODS = ("bp", "ecdf", "kernel", "boxcox")
TARGETS = ("auc", "youden", "cutoff")
ROC_GRID = 2001


@dataclass(frozen=True)
class Scenario:
    """Two-population design. Gamma parameters are (shape, rate)."""

    family: str
    params0: tuple
    params1: tuple
    n0: int = 100
    n1: int = 100
    name: str = ""

    def __post_init__(self):
        if self.family not in ("normal", "gamma", "beta"):
            raise ValueError(f"unknown family {self.family!r}")
        if self.family == "normal":
            ok = self.params0[1] > 0 and self.params1[1] > 0
        else:
            ok = all(v > 0 for v in (*self.params0, *self.params1))
        if not ok or self.n0 < 2 or self.n1 < 2:
            raise ValueError(f"invalid scenario parameters: {self}")

    def with_sizes(self, n0: int, n1: int) -> "Scenario":
        return Scenario(self.family, self.params0, self.params1, n0, n1, self.name)

    def dist(self, group: int):
        p = self.params0 if group == 0 else self.params1
        if self.family == "normal":
            return stats.norm(loc=p[0], scale=math.sqrt(p[1]))
        if self.family == "gamma":
            return stats.gamma(p[0], scale=1.0 / p[1])
        return stats.beta(p[0], p[1])

    @property
    def true_auc(self) -> float:
        return true_summary(self).auc

    @property
    def true_j(self) -> float:
        return true_summary(self).youden

    @property
    def true_cutoff(self) -> float:
        return true_summary(self).cutoff


# normal parameters are (mean, variance)
CATALOG = {
    "normal-0.3": Scenario("normal", (10.0, 1.0), (10.771, 1.0), name="normal-0.3"),
    "normal-0.5": Scenario("normal", (10.0, 1.0), (11.349, 1.0), name="normal-0.5"),
    "normal-0.7": Scenario("normal", (10.0, 1.0), (12.073, 1.0), name="normal-0.7"),
    # rate 0.947 gives J = 0.300 and AUC = 0.708; the often-quoted 0.937 gives J = 0.306
    "gamma-0.3": Scenario("gamma", (2.0, 1.0), (3.0, 0.947), name="gamma-0.3"),
    "gamma-0.5": Scenario("gamma", (2.0, 1.0), (4.0, 0.944), name="gamma-0.5"),
    "gamma-0.7": Scenario("gamma", (2.0, 1.0), (5.0, 0.827), name="gamma-0.7"),
    "beta-0.3": Scenario("beta", (2.0, 2.0), (3.838, 2.0), name="beta-0.3"),
    "beta-0.5": Scenario("beta", (2.0, 2.0), (6.148, 2.0), name="beta-0.5"),
    "beta-0.7": Scenario("beta", (2.0, 2.0), (11.014, 2.0), name="beta-0.7"),
}


def get_scenario(name: str, n0: int = 100, n1: int = 100) -> Scenario:
    try:
        return CATALOG[name].with_sizes(n0, n1)
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(CATALOG)}") from None


# -- data generation ---------------------------------------------------------


def _draw(rng: np.random.Generator, family: str, params, size: int) -> np.ndarray:
    if family == "normal":
        return params[0] + math.sqrt(params[1]) * rng.standard_normal(size)
    if family == "gamma":
        # Marsaglia-Tsang rejection with the shape < 1 boost
        return rng.standard_gamma(params[0], size) / params[1]
    g1 = rng.standard_gamma(params[0], size)
    g2 = rng.standard_gamma(params[1], size)
    return g1 / (g1 + g2)


def generate(scenario: Scenario, seed: int, replicate_index: int) -> TwoSampleData:
    rng0 = stream(seed, replicate_index, 0)
    rng1 = stream(seed, replicate_index, 1)
    return TwoSampleData(
        _draw(rng0, scenario.family, scenario.params0, scenario.n0),
        _draw(rng1, scenario.family, scenario.params1, scenario.n1),
    )


# -- population truth --------------------------------------------------------


@dataclass(frozen=True)
class TrueSummary:
    auc: float
    youden: float
    cutoff: float
    roc: Callable = field(repr=False)


def true_summary(scenario: Scenario) -> TrueSummary:
    d0, d1 = scenario.dist(0), scenario.dist(1)
    if scenario.family == "normal":
        (m0, v0), (m1, v1) = scenario.params0, scenario.params1
        auc = float(stats.norm.cdf((m1 - m0) / math.sqrt(v0 + v1)))
        cutoff = binormal_cutoff(m0, math.sqrt(v0), m1, math.sqrt(v1))
    else:
        lo, hi = d0.support()
        lo1, hi1 = d1.support()
        lo, hi = max(lo, lo1), min(hi, hi1)
        auc = integrate.quad(lambda x: d0.pdf(x) * d1.sf(x), lo, hi, epsabs=1e-10, limit=200)[0]
        # the log density ratio is increasing; find where it crosses zero
        a = d0.ppf(1e-12)
        b = d1.ppf(1 - 1e-12)

        def gap(x):
            return d1.logpdf(x) - d0.logpdf(x)

        cutoff = optimize.brentq(gap, a, b, xtol=1e-12)
    youden = float(d0.cdf(cutoff) - d1.cdf(cutoff))
    return TrueSummary(float(auc), youden, float(cutoff), _TrueRoc(scenario))


# -- metrics -------------------------------------------------------------------


def l1_l2_distance(est_roc: Callable, true_roc: Callable, grid: int = ROC_GRID):
    """Midpoint-rule L1 and L2 distances between two ROC curves on [0, 1]."""
    s = (np.arange(grid) + 0.5) / grid
    diff = np.asarray(est_roc(s)) - np.asarray(true_roc(s))
    return float(np.mean(np.abs(diff))), float(math.sqrt(np.mean(diff * diff)))


def rb_mse(estimates: Sequence[float], truth: float):
    """Relative bias in percent and (unscaled) mean squared error."""
    if truth == 0:
        raise ZeroTruth("relative bias undefined for a zero true value")
    est = np.asarray(estimates, dtype=float)
    if est.size == 0:
        raise ValueError("no estimates")
    rb = float(np.mean((est - truth) / truth) * 100.0)
    mse = float(np.mean((est - truth) ** 2))
    return rb, mse


def estimate(data: TwoSampleData, method: str, **bp_options) -> RocSummary:
    if method == "bp":
        return summarize(fit_bp(data, **bp_options))
    try:
        return METHODS[method](data)
    except KeyError:
        raise ValueError(f"unknown method {method!r}") from None


# -- replication engine --------------------------------------------------------


@dataclass(frozen=True)
class MetricReport:
    method: str
    replications: int
    seed: int
    l1_mean: float
    l2_mean: float
    rb_percent: dict
    mse: dict
    failures: int = 0
    order_counts: dict = field(default_factory=dict)
    scenario: str = ""
    n0: int = 0
    n1: int = 0

    @property
    def mse_scaled(self) -> dict:
        """MSE x 1000, the unit used in published comparison tables."""
        return {k: v * 1000.0 for k, v in self.mse.items()}

    def row(self) -> dict:
        out = {
            "scenario": self.scenario,
            "n0": self.n0,
            "n1": self.n1,
            "method": self.method,
            "replications": self.replications,
            "failures": self.failures,
            "seed": self.seed,
            "l1_mean": self.l1_mean,
            "l2_mean": self.l2_mean,
        }
        for t in TARGETS:
            out[f"{t}_rb_percent"] = self.rb_percent[t]
            out[f"{t}_mse_x1000"] = self.mse_scaled[t]
        return out


def _replicate(index, *, scenario, seed, methods, truth_roc, bp_options):
    data = generate(scenario, seed, index)
    out = {}
    for method in methods:
        try:
            summ = estimate(data, method, **(bp_options if method == "bp" else {}))
        except (LrrocError, ArithmeticError):
            out[method] = None
            continue
        l1, l2 = l1_l2_distance(summ.roc, truth_roc)
        vals = (l1, l2, summ.auc, summ.youden, summ.cutoff)
        out[method] = None if not all(map(math.isfinite, vals)) else (*vals, summ.order)
    return out


def run_scenario(
    scenario: Scenario,
    methods: Iterable[str] = ALL_METHODS,
    reps: int = 2000,
    seed: int = 0,
    *,
    workers=None,
    bp_options: Optional[dict] = None,
) -> list:
    """Monte-Carlo comparison; every method sees the same data per replicate."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    methods = tuple(methods)
    for m in methods:
        if m not in ALL_METHODS:
            raise ValueError(f"unknown method {m!r}")
    truth = true_summary(scenario)
    task = partial(
        _replicate,
        scenario=scenario,
        seed=seed,
        methods=methods,
        truth_roc=truth.roc,
        bp_options=bp_options or {},
    )
    results = pmap(task, range(reps), workers)
    reports = []
    for method in methods:
        rows = [r[method] for r in results if r[method] is not None]
        failures = reps - len(rows)
        if not rows:
            nan = {t: math.nan for t in TARGETS}
            reports.append(
                MetricReport(method, 0, seed, math.nan, math.nan, nan, dict(nan), failures,
                             scenario=scenario.name, n0=scenario.n0, n1=scenario.n1)
            )
            continue
        arr = np.array([row[:5] for row in rows])
        rb, mse = {}, {}
        for j, (t, true_val) in enumerate(
            zip(TARGETS, (truth.auc, truth.youden, truth.cutoff)), start=2
        ):
            rb[t], mse[t] = rb_mse(arr[:, j], true_val)
        counts = {}
        for row in rows:
            if row[5] is not None:
                counts[row[5]] = counts.get(row[5], 0) + 1
        reports.append(
            MetricReport(
                method,
                len(rows),
                seed,
                float(arr[:, 0].mean()),
                float(arr[:, 1].mean()),
                rb,
                mse,
                failures,
                dict(sorted(counts.items())),
                scenario.name,
                scenario.n0,
                scenario.n1,
            )
        )
    return reports


class _TrueRoc:
    """Picklable true ROC evaluator (scipy frozen distributions pickle fine)."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario

    def __call__(self, s):
        d0, d1 = self.scenario.dist(0), self.scenario.dist(1)
        out = 1.0 - d1.cdf(d0.ppf(1.0 - np.clip(np.asarray(s, dtype=float), 0.0, 1.0)))
        return float(out) if np.ndim(out) == 0 else out


# -- bootstrap confidence intervals ------------------------------------------------


@dataclass(frozen=True)
class BootstrapCI:
    statistic: str
    method: str
    point: float
    lower: float
    upper: float
    level: float
    reps: int
    failures: int


def _ci_replicate(b, *, data, method, seed, bp_options):
    rng = stream(seed, b)
    boot = TwoSampleData(
        rng.choice(data.healthy, size=data.n0, replace=True),
        rng.choice(data.diseased, size=data.n1, replace=True),
    )
    try:
        summ = estimate(boot, method, **bp_options)
    except (LrrocError, ArithmeticError):
        return None
    vals = {"auc": summ.auc, "youden": summ.youden, "cutoff": summ.cutoff}
    return vals if all(map(math.isfinite, vals.values())) else None


def bootstrap_ci(
    data: TwoSampleData,
    statistics: Sequence[str] = TARGETS,
    method: str = "bp",
    B: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    *,
    workers=None,
    bp_options: Optional[dict] = None,
) -> dict:
    """Percentile intervals from within-group resampling.

    Returns ``{statistic: BootstrapCI}``. Replicates whose fit fails are
    dropped; more than 10% dropped raises ``TooManyFailures``.
    """
    if isinstance(statistics, str):
        statistics = (statistics,)
    if not 0 < level < 1:
        raise ValueError("level must lie in (0, 1)")
    if B < 2 / (1 - level):
        raise ValueError(f"B={B} too small for level {level}; need >= {2 / (1 - level):.0f}")
    bp_options = bp_options or {}
    point = estimate(data, method, **(bp_options if method == "bp" else {}))
    task = partial(
        _ci_replicate,
        data=data,
        method=method,
        seed=seed,
        bp_options=bp_options if method == "bp" else {},
    )
    reps = [r for r in pmap(task, range(B), workers) if r is not None]
    failures = B - len(reps)
    if failures > 0.1 * B:
        raise TooManyFailures(f"{failures} of {B} bootstrap replicates failed")
    alpha = (1 - level) / 2
    out = {}
    for stat in statistics:
        vals = np.array([r[stat] for r in reps])
        lo, hi = np.quantile(vals, [alpha, 1 - alpha], method="linear")
        out[stat] = BootstrapCI(
            stat, method, float(getattr(point, stat)), float(lo), float(hi), level, B, failures
        )
    return out
