"""Bernstein-polynomial estimator of two cdfs under likelihood-ratio ordering.

Pipeline: pool the two samples, map the support into [0, 1] (optionally
also on the log scale), choose the order N by BIC, fit the monotone
logistic model, then turn the fitted posterior ``theta(t_i)`` into point
masses

    p0_i = phi_i (1 - theta_i) / (1 - lambda),   p1_i = phi_i theta_i / lambda,

with ``phi_i = (a_i + b_i) / n``. Everything downstream (cdfs, ROC, AUC,
Youden index, cutoff) is computed from these step functions.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import partial
from typing import Callable, Optional, Sequence, Union

import numpy as np

from ._parallel import pmap
from ._random import stream
from .bernstein_basis import build_design, design_rows
from .constrained_logit import (
    DEFAULT_CANDIDATES,
    CoefficientVector,
    FitReport,
    OrderSelection,
    _log_sigmoid,
    fit_constrained,
    logit,
    select_order_bic,
)
from .data_model import (
    SINGLE,
    PooledSupport,
    TransformSpec,
    TwoSampleData,
    default_mode,
    invert_transform,
    make_transform,
    pool_and_count,
)
from .errors import DomainError, LrrocError

__all__ = [
    "BpModelFit",
    "CdfEstimate",
    "GofResult",
    "RocSummary",
    "auc",
    "cdf_at",
    "fit_bp",
    "gof_bootstrap",
    "gof_statistic",
    "invert_transform",
    "roc_eval",
    "summarize",
    "theta_hat",
    "youden_cutoff",
]

# quantile search slack for cumulative sums that end a few ulps short of 1
_Q_SLACK = 1e-10


def _step_cdf(p: np.ndarray) -> np.ndarray:
    # running sums miss 1 by a few ulps; snap the terminal value
    F = np.minimum(np.cumsum(p), 1.0)
    if F.size and abs(F[-1] - 1.0) <= 1e-12:
        F[-1] = 1.0
    return F


@dataclass(frozen=True)
class CdfEstimate:
    """Two right-continuous step cdfs sharing jump points ``t``."""

    t: np.ndarray
    p0: np.ndarray
    p1: np.ndarray

    @property
    def F0(self) -> np.ndarray:
        return _step_cdf(self.p0)

    @property
    def F1(self) -> np.ndarray:
        return _step_cdf(self.p1)

    def cdf(self, group: int, x):
        if group not in (0, 1):
            raise ValueError(f"group must be 0 or 1, got {group}")
        F = self.F0 if group == 0 else self.F1
        idx = np.searchsorted(self.t, np.asarray(x, dtype=float), side="right")
        out = np.where(idx > 0, F[np.maximum(idx - 1, 0)], 0.0)
        return float(out) if out.ndim == 0 else out

    def roc(self, s):
        """``1 - F1(F0^{-1}(1 - s))`` with ``F0^{-1}(q) = inf{x : F0(x) >= q}``."""
        s = np.asarray(s, dtype=float)
        if np.any((s < 0) | (s > 1)) or np.any(np.isnan(s)):
            raise DomainError("ROC argument must lie in [0, 1]")
        q = 1.0 - s
        F0, F1 = self.F0, self.F1
        idx = np.minimum(np.searchsorted(F0, q - _Q_SLACK, side="left"), F0.size - 1)
        out = np.clip(np.where(q <= 0, 1.0, 1.0 - F1[idx]), 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def auc(self) -> float:
        """Exact area under the staircase: ``sum_i p0_i (1 - F1(t_i))``."""
        return float(np.clip(self.p0 @ (1.0 - self.F1), 0.0, 1.0))

    def vertices(self) -> np.ndarray:
        """Staircase corners ``(s, ROC)`` sorted by ``s``, ending at (1, 1)."""
        s = 1.0 - self.F0[::-1]
        r = 1.0 - self.F1[::-1]
        pts = np.column_stack([np.append(np.clip(s, 0, 1), 1.0), np.append(np.clip(r, 0, 1), 1.0)])
        return pts

    def youden_grid(self):
        """``(J, C)`` maximising ``F0 - F1`` over jump points; smallest maximiser."""
        diff = self.F0 - self.F1
        i = int(np.argmax(diff))
        return float(diff[i]), float(self.t[i])


@dataclass(frozen=True)
class RocSummary:
    method: str
    roc: Callable
    auc: float
    youden: float
    cutoff: float
    cutoff_method: str
    cdf0: Callable = field(repr=False, default=None)
    cdf1: Callable = field(repr=False, default=None)
    vertices: Optional[np.ndarray] = field(repr=False, default=None)
    order: Optional[int] = None
    mode: Optional[str] = None
    diagnostics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class BpModelFit:
    support: PooledSupport
    spec: TransformSpec
    coefficients: CoefficientVector
    order: int
    phi: np.ndarray
    p0: np.ndarray
    p1: np.ndarray
    lam: float
    report: FitReport = field(repr=False)
    selection: Optional[OrderSelection] = field(repr=False, default=None)
    mode_fallback: bool = False

    @property
    def theta(self) -> np.ndarray:
        """Fitted posterior at the support points."""
        return theta_hat(self, self.support.t)

    @property
    def cdfs(self) -> CdfEstimate:
        return CdfEstimate(self.support.t, self.p0, self.p1)


def _eta(fit: BpModelFit, x) -> np.ndarray:
    """Log density ratio ``alpha0 + slopes . B*(x)``, without the prior offset."""
    rows = design_rows(x, fit.spec, fit.order)
    return fit.coefficients.alpha0 + rows @ fit.coefficients.slopes


def theta_hat(fit: BpModelFit, x):
    x_arr = np.asarray(x, dtype=float)
    out = np.exp(_log_sigmoid(_eta(fit, x_arr.ravel()) + logit(fit.lam))).reshape(x_arr.shape)
    return float(out) if out.ndim == 0 else out


def fit_bp(
    data: TwoSampleData,
    order: Union[str, int] = "auto",
    mode: Optional[str] = None,
    bic_candidates: Sequence[int] = DEFAULT_CANDIDATES,
) -> BpModelFit:
    """Fit the constrained Bernstein model.

    ``mode=None`` picks the dual (original + log) basis when every value is
    positive and falls back to the single basis with a ``UserWarning``
    otherwise.
    """
    support = pool_and_count(data)
    fallback = False
    if mode is None:
        mode = default_mode(support)
        if mode == SINGLE:
            fallback = True
            warnings.warn(
                "non-positive values present; using the single (untransformed) basis",
                UserWarning,
                stacklevel=2,
            )
    spec = make_transform(support, mode)
    lam = data.lam
    selection = None
    if order == "auto":
        selection = select_order_bic(support, spec, lam, bic_candidates)
        N = selection.chosen
    else:
        N = int(order)
    design = build_design(support, spec, N)
    report = fit_constrained(design, support, lam, constrained=True)
    return _assemble(support, spec, N, lam, report, selection, fallback, design.matrix)


def _assemble(support, spec, N, lam, report, selection, fallback, matrix) -> BpModelFit:
    coef = report.coefficients
    eta = logit(lam) + coef.alpha0 + matrix @ coef.slopes
    theta = np.exp(_log_sigmoid(eta))
    one_minus = np.exp(_log_sigmoid(-eta))
    phi = support.counts / support.n
    # at a stationary point sum(phi theta) = lam, so these equal
    # phi (1 - theta) / (1 - lam) and phi theta / lam; normalising keeps the
    # masses proper when a separated fit stops at the cap
    p0 = phi * one_minus / float(phi @ one_minus)
    p1 = phi * theta / float(phi @ theta)
    for arr in (phi, p0, p1):
        arr.setflags(write=False)
    return BpModelFit(support, spec, coef, N, phi, p0, p1, lam, report, selection, fallback)


def cdf_at(fit: BpModelFit, group: int, x):
    return fit.cdfs.cdf(group, x)


def roc_eval(fit: BpModelFit, s):
    return fit.cdfs.roc(s)


def auc(fit: BpModelFit) -> float:
    return fit.cdfs.auc()


def youden_cutoff(fit: BpModelFit):
    """Solve ``theta(C) = lambda`` by bisection; returns ``(J, C, method)``.

    ``theta(C) = lambda`` is ``eta(C) = 0`` with ``eta`` nondecreasing. When
    ``eta`` does not change sign over the support, ``C`` falls back to the
    smallest support point maximising ``F0 - F1`` (``"grid_fallback"``).
    """
    cdfs = fit.cdfs
    lo, hi = fit.spec.t_min, fit.spec.t_max
    e_lo, e_hi = _eta(fit, [lo, hi])
    if e_lo > 0 or e_hi < 0:
        J, C = cdfs.youden_grid()
        return J, C, "grid_fallback"
    width_tol = 1e-12 * (hi - lo)
    C = 0.5 * (lo + hi)
    while True:
        C = 0.5 * (lo + hi)
        e = float(_eta(fit, [C])[0])
        if abs(e) <= 1e-10 or hi - lo <= width_tol:
            break
        if e < 0:
            lo = C
        else:
            hi = C
    J = cdfs.cdf(0, C) - cdfs.cdf(1, C)
    return float(J), float(C), "root"


def summarize(fit: BpModelFit) -> RocSummary:
    cdfs = fit.cdfs
    J, C, how = youden_cutoff(fit)
    rep = fit.report
    diag = {
        "converged": rep.converged,
        "separation": rep.separation_flag,
        "iterations": rep.iterations,
        "kkt_residual": rep.kkt_residual,
        "mode_fallback": fit.mode_fallback,
    }
    if fit.selection is not None:
        diag["bic"] = dict(zip(fit.selection.candidates, fit.selection.bic))
    return RocSummary(
        method="bp",
        roc=cdfs.roc,
        auc=cdfs.auc(),
        youden=J,
        cutoff=C,
        cutoff_method=how,
        cdf0=partial(cdfs.cdf, 0),
        cdf1=partial(cdfs.cdf, 1),
        vertices=cdfs.vertices(),
        order=fit.order,
        mode=fit.spec.mode,
        diagnostics=diag,
    )


# -- goodness of fit -------------------------------------------------------


@dataclass(frozen=True)
class GofResult:
    delta: float
    bootstrap_reps: int
    p_value: float
    failures: int = 0
    order: Optional[int] = None


def gof_statistic(fit: BpModelFit, data: TwoSampleData) -> float:
    """Sup distance between the fitted and empirical healthy cdfs.

    Both are step functions jumping only at the pooled support points, so the
    supremum is attained there.
    """
    support = fit.support
    empirical = np.cumsum(support.a) / data.n0
    return float(np.max(np.abs(fit.cdfs.F0 - empirical)))


def _gof_replicate(b, *, seed, t, p0, p1, n0, n1, order, mode):
    rng = stream(seed, b)
    c0 = rng.multinomial(n0, p0 / p0.sum())
    c1 = rng.multinomial(n1, p1 / p1.sum())
    boot = TwoSampleData(np.repeat(t, c0), np.repeat(t, c1))
    try:
        refit = fit_bp(boot, order=order, mode=mode)
    except LrrocError:
        return None
    return gof_statistic(refit, boot)


def gof_bootstrap(
    data: TwoSampleData,
    B: int = 1000,
    seed: int = 0,
    *,
    order: Union[str, int] = "auto",
    mode: Optional[str] = None,
    bic_candidates: Sequence[int] = DEFAULT_CANDIDATES,
    workers=None,
    fit: Optional[BpModelFit] = None,
) -> GofResult:
    """Parametric bootstrap p-value for the likelihood-ratio-ordering model.

    Resamples ``n0`` values from the fitted ``F0`` and ``n1`` from ``F1``
    (multinomial over the support points), refits with the order chosen on
    the original data, and returns ``(1 + #{delta* >= delta}) / (B' + 1)``
    where ``B'`` counts the replicates that fitted successfully.
    """
    if B < 1:
        raise ValueError("need at least one bootstrap replicate")
    if fit is None:
        fit = fit_bp(data, order=order, mode=mode, bic_candidates=bic_candidates)
    delta = gof_statistic(fit, data)
    task = partial(
        _gof_replicate,
        seed=seed,
        t=np.asarray(fit.support.t),
        p0=np.asarray(fit.p0),
        p1=np.asarray(fit.p1),
        n0=data.n0,
        n1=data.n1,
        order=fit.order,
        mode=fit.spec.mode,
    )
    stats = [d for d in pmap(task, range(B), workers) if d is not None]
    failures = B - len(stats)
    # tolerance keeps exact ties from flipping on rounding noise
    exceed = sum(d >= delta - 1e-12 for d in stats)
    p = (1 + exceed) / (len(stats) + 1)
    return GofResult(delta, B, p, failures, fit.order)
