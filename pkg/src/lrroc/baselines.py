"""Comparison estimators: empirical, Gaussian-kernel and Box-Cox binormal.

Conventions used by the kernel method, fixed so results reproduce exactly:

* sample standard deviation uses the ``n - 1`` divisor;
* the interquartile range uses linear interpolation between order
  statistics: the p-quantile of sorted ``x[0..n-1]`` is
  ``x[j] + g (x[j+1] - x[j])`` with ``h = (n - 1) p``, ``j = floor(h)``,
  ``g = h - j`` (``numpy.quantile(method="linear")``);
* ROC, Youden index and cutoff are read off a grid of 10001 equally spaced
  points spanning ``[min - 3 h, max + 3 h]`` with ``h = max(h0, h1)``, and
  the AUC is a midpoint sum on the same grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import partial

import numpy as np
from scipy.special import ndtr, ndtri

from .bp_estimator import CdfEstimate, RocSummary
from .data_model import TwoSampleData, pool_and_count
from .errors import DegenerateVariance, NonPositiveData, ZeroBandwidth

KERNEL_GRID = 10001


def ecdf_summary(data: TwoSampleData) -> RocSummary:
    support = pool_and_count(data)
    cdfs = CdfEstimate(support.t, support.a / data.n0, support.b / data.n1)
    J, C = cdfs.youden_grid()
    # staircase sum in integer counts, so the value is the exact pair count
    # ratio #{diseased > healthy} / (n0 n1) with a single rounding
    above = data.n1 - np.cumsum(support.b)
    pairs = int(np.dot(support.a.astype(np.int64), above))
    return RocSummary(
        method="ecdf",
        roc=cdfs.roc,
        auc=pairs / (data.n0 * data.n1),
        youden=J,
        cutoff=C,
        cutoff_method="grid",
        cdf0=partial(cdfs.cdf, 0),
        cdf1=partial(cdfs.cdf, 1),
        vertices=cdfs.vertices(),
    )


# -- kernel ----------------------------------------------------------------


@dataclass(frozen=True)
class KernelConfig:
    h0: float
    h1: float
    s0: float
    s1: float
    q0: float
    q1: float


def _iqr(x: np.ndarray) -> float:
    q75, q25 = np.quantile(x, [0.75, 0.25], method="linear")
    return float(q75 - q25)


def _rule_of_thumb(x: np.ndarray):
    s = float(np.std(x, ddof=1))
    q = _iqr(x)
    spread = min(s, q / 1.34)
    if not spread > 0:
        raise ZeroBandwidth("bandwidth rule gives zero: sample has no spread")
    return 0.9 * spread * x.size ** (-0.2), s, q


def kernel_config(data: TwoSampleData) -> KernelConfig:
    h0, s0, q0 = _rule_of_thumb(data.healthy)
    h1, s1, q1 = _rule_of_thumb(data.diseased)
    return KernelConfig(h0, h1, s0, s1, q0, q1)


def _smoothed_cdf(x, obs, h):
    x = np.asarray(x, dtype=float)
    return ndtr((x[..., None] - obs) / h).mean(axis=-1)


def kernel_summary(data: TwoSampleData, config: KernelConfig | None = None) -> RocSummary:
    """Gaussian-kernel smoothed cdfs; ``config`` overrides the bandwidths."""
    cfg = config or kernel_config(data)
    h = max(cfg.h0, cfg.h1)
    lo = min(data.healthy.min(), data.diseased.min()) - 3 * h
    hi = max(data.healthy.max(), data.diseased.max()) + 3 * h
    grid = np.linspace(lo, hi, KERNEL_GRID)
    F0 = _smoothed_cdf(grid, data.healthy, cfg.h0)
    F1 = _smoothed_cdf(grid, data.diseased, cfg.h1)

    mid = 0.5 * (grid[1:] + grid[:-1])
    auc = float(np.diff(F0) @ (1.0 - _smoothed_cdf(mid, data.diseased, cfg.h1)))

    diff = F0 - F1
    k = int(np.argmax(diff))
    J, C = float(diff[k]), float(grid[k])

    # ROC through the grid points (1 - F0, 1 - F1), increasing in s
    s_pts = np.concatenate([[0.0], (1.0 - F0)[::-1], [1.0]])
    r_pts = np.concatenate([[0.0], (1.0 - F1)[::-1], [1.0]])
    s_pts = np.maximum.accumulate(s_pts)
    r_pts = np.maximum.accumulate(r_pts)

    def roc(s):
        s = np.asarray(s, dtype=float)
        out = np.interp(s, s_pts, r_pts)
        return float(out) if out.ndim == 0 else out

    return RocSummary(
        method="kernel",
        roc=roc,
        auc=auc,
        youden=J,
        cutoff=C,
        cutoff_method="grid",
        cdf0=partial(_smoothed_cdf, obs=data.healthy, h=cfg.h0),
        cdf1=partial(_smoothed_cdf, obs=data.diseased, h=cfg.h1),
        diagnostics={"h0": cfg.h0, "h1": cfg.h1},
    )


# -- Box-Cox binormal -------------------------------------------------------


@dataclass(frozen=True)
class BoxCoxFit:
    bc_lambda: float
    mu0: float
    sigma0: float
    mu1: float
    sigma1: float

    def transform(self, x):
        return boxcox_transform(x, self.bc_lambda)

    def inverse(self, y):
        lam = self.bc_lambda
        y = np.asarray(y, dtype=float)
        if abs(lam) < 1e-12:
            return np.exp(y)
        base = lam * y + 1.0
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(base > 0, np.abs(base) ** (1.0 / lam), np.nan)


def boxcox_transform(x, lam: float):
    x = np.asarray(x, dtype=float)
    if abs(lam) < 1e-12:
        return np.log(x)
    return np.expm1(lam * np.log(x)) / lam


def _profile_loglik(lam, x0, x1, sum_log):
    # normal MLE per group on the transformed scale, plus the Jacobian term
    total = (lam - 1.0) * sum_log
    for x in (x0, x1):
        var = float(np.var(boxcox_transform(x, lam)))
        if not var > 0:
            return -math.inf
        total -= 0.5 * x.size * math.log(var)
    return total


def golden_max(f, lo: float, hi: float, tol: float = 1e-8) -> float:
    """Golden-section search for the maximiser of a unimodal ``f`` on ``[lo, hi]``."""
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(d)
    return 0.5 * (a + b)


def fit_boxcox(data: TwoSampleData, bounds=(-3.0, 3.0)) -> BoxCoxFit:
    x0, x1 = data.healthy, data.diseased
    if np.any(x0 <= 0) or np.any(x1 <= 0):
        raise NonPositiveData("Box-Cox needs strictly positive observations")
    sum_log = float(np.log(x0).sum() + np.log(x1).sum())
    lam = golden_max(partial(_profile_loglik, x0=x0, x1=x1, sum_log=sum_log), *bounds)
    y0, y1 = boxcox_transform(x0, lam), boxcox_transform(x1, lam)
    s0, s1 = float(np.std(y0, ddof=1)), float(np.std(y1, ddof=1))
    if not (s0 > 0 and s1 > 0):
        raise DegenerateVariance("transformed sample has zero variance")
    return BoxCoxFit(lam, float(y0.mean()), s0, float(y1.mean()), s1)


def binormal_cutoff(mu0, s0, mu1, s1) -> float:
    """Point where the two normal densities cross, maximising ``F0 - F1``."""

    def youden(c):
        return ndtr((c - mu0) / s0) - ndtr((c - mu1) / s1)

    if math.isclose(s0, s1, rel_tol=1e-10):
        return 0.5 * (mu0 + mu1)
    # log f0 = log f1 is quadratic in c
    A = 1.0 / s1**2 - 1.0 / s0**2
    Bq = 2.0 * (mu0 / s0**2 - mu1 / s1**2)
    Cq = mu1**2 / s1**2 - mu0**2 / s0**2 + 2.0 * math.log(s1 / s0)
    disc = Bq * Bq - 4.0 * A * Cq
    if disc < 0:
        return 0.5 * (mu0 + mu1)
    sq = math.sqrt(disc)
    roots = [(-Bq + sq) / (2 * A), (-Bq - sq) / (2 * A)]
    return max(roots, key=youden)


def boxcox_summary(data: TwoSampleData) -> RocSummary:
    fit = fit_boxcox(data)
    a = (fit.mu1 - fit.mu0) / fit.sigma1
    b = fit.sigma0 / fit.sigma1
    auc = float(ndtr(a / math.sqrt(1.0 + b * b)))
    c_y = binormal_cutoff(fit.mu0, fit.sigma0, fit.mu1, fit.sigma1)
    J = float(ndtr((c_y - fit.mu0) / fit.sigma0) - ndtr((c_y - fit.mu1) / fit.sigma1))
    C = float(fit.inverse(c_y))

    def roc(s):
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            out = ndtr(a + b * ndtri(s))
        return float(out) if out.ndim == 0 else out

    def cdf(x, mu, sigma):
        return ndtr((fit.transform(x) - mu) / sigma)

    return RocSummary(
        method="boxcox",
        roc=roc,
        auc=auc,
        youden=J,
        cutoff=C,
        cutoff_method="root",
        cdf0=partial(cdf, mu=fit.mu0, sigma=fit.sigma0),
        cdf1=partial(cdf, mu=fit.mu1, sigma=fit.sigma1),
        diagnostics={"bc_lambda": fit.bc_lambda},
    )


METHODS = {
    "ecdf": ecdf_summary,
    "kernel": kernel_summary,
    "boxcox": boxcox_summary,
}
