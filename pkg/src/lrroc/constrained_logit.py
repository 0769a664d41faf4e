"""Weighted Bernoulli likelihood with nonnegative slopes, and BIC order choice.

The factor of the empirical likelihood that carries the density-ratio
coefficients is a logistic regression on the pooled support points: point
``t_i`` contributes ``b_i`` successes and ``a_i`` failures, the linear
predictor is ``alpha0 + logit(lambda) + slopes . row_i`` and every slope is
constrained to be ``>= 0``.

The solver is a projected Newton method (Bertsekas-style active set) with an
Armijo line search along the projection arc. The objective is concave, so
accepted iterates increase it monotonically; ``FitReport.history`` records
the sequence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .bernstein_basis import BasisDesign, build_design
from .data_model import PooledSupport, TransformSpec

ETA_CAP = 30.0
MAX_ITER = 500
KKT_TOL = 1e-6
# iterate past the certificate tolerance while steps still make progress
_KKT_TARGET = 1e-9
DEFAULT_CANDIDATES = tuple(range(1, 11))


@dataclass(frozen=True)
class CoefficientVector:
    alpha0: float
    slopes: np.ndarray

    @property
    def beta(self) -> np.ndarray:
        """Ordered Bernstein coefficients, cumulative sums of the alphas.

        Only meaningful in single mode, where the slopes are the increments
        ``beta_l - beta_{l-1}``.
        """
        return self.alpha0 + np.concatenate([[0.0], np.cumsum(self.slopes)])

    def as_array(self) -> np.ndarray:
        return np.concatenate([[self.alpha0], self.slopes])

    @classmethod
    def from_array(cls, arr) -> "CoefficientVector":
        arr = np.asarray(arr, dtype=float)
        slopes = arr[1:].copy()
        slopes.setflags(write=False)
        return cls(float(arr[0]), slopes)


@dataclass(frozen=True)
class FitReport:
    coefficients: CoefficientVector
    loglik: float
    iterations: int
    converged: bool
    separation_flag: bool
    kkt_residual: float
    constrained: bool
    history: tuple = field(repr=False, default=())


@dataclass(frozen=True)
class OrderSelection:
    candidates: tuple
    bic: tuple
    df: tuple
    chosen: int


def logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _log_sigmoid(eta):
    return -np.logaddexp(0.0, -eta)


def _sigmoid(eta):
    return np.exp(_log_sigmoid(eta))


class _Problem:
    """Precomputed pieces of the objective for one design."""

    def __init__(self, design: BasisDesign, support: PooledSupport, lam: float):
        if not 0.0 < lam < 1.0:
            raise ValueError(f"lambda must lie in (0, 1), got {lam}")
        if design.rows != support.m:
            raise ValueError("design rows do not match support points")
        m = support.m
        self.X = np.hstack([np.ones((m, 1)), np.asarray(design.matrix, dtype=float)])
        self.a = np.asarray(support.a, dtype=float)
        self.b = np.asarray(support.b, dtype=float)
        self.w = self.a + self.b
        self.offset = logit(lam)

    def eta(self, coef: np.ndarray) -> np.ndarray:
        return self.offset + self.X @ coef

    def loglik_eta(self, eta: np.ndarray) -> float:
        return float(self.b @ _log_sigmoid(eta) + self.a @ _log_sigmoid(-eta))

    def grad_eta(self, eta: np.ndarray) -> np.ndarray:
        return self.X.T @ (self.b - self.w * _sigmoid(eta))

    def hess_weights(self, eta: np.ndarray) -> np.ndarray:
        s = _sigmoid(eta)
        return self.w * s * (1.0 - s)


def loglik(coeffs: CoefficientVector, design: BasisDesign, support: PooledSupport, lam: float) -> float:
    """Natural-log objective ``sum b_i log theta_i + a_i log(1 - theta_i)``."""
    prob = _Problem(design, support, lam)
    return prob.loglik_eta(prob.eta(coeffs.as_array()))


def loglik_gradient(
    coeffs: CoefficientVector, design: BasisDesign, support: PooledSupport, lam: float
) -> np.ndarray:
    """Analytic gradient; entry 0 is the intercept."""
    prob = _Problem(design, support, lam)
    return prob.grad_eta(prob.eta(coeffs.as_array()))


def _natural_residual(coef, g, constrained):
    r = -g.copy()
    if constrained:
        r[1:] = coef[1:] - np.maximum(0.0, coef[1:] + g[1:])
    return r


def _project(coef, constrained):
    if constrained:
        coef = coef.copy()
        coef[1:] = np.maximum(coef[1:], 0.0)
    return coef


def _cap_step(eta, Xd, cap):
    """Largest step keeping every linear predictor within ``[-cap, cap]``."""
    with np.errstate(divide="ignore", invalid="ignore"):
        up = np.where(Xd > 0, (cap - eta) / Xd, np.inf)
        down = np.where(Xd < 0, (-cap - eta) / Xd, np.inf)
    return float(max(0.0, min(up.min(initial=np.inf), down.min(initial=np.inf))))


def _nullspace(C: np.ndarray, k: int) -> np.ndarray:
    """Orthonormal basis of ``{d : C d = 0}`` in ``R^k``."""
    if C.shape[0] == 0:
        return np.eye(k)
    _, sv, vt = np.linalg.svd(C)
    rank = int(np.sum(sv > 1e-12 * max(1.0, sv[0])))
    return vt[rank:].T


def _solve_psd(H, g):
    try:
        d = np.linalg.solve(H, g)
        if np.all(np.isfinite(d)) and g @ d > 0:
            return d
    except np.linalg.LinAlgError:
        pass
    return np.linalg.lstsq(H, g, rcond=1e-13)[0]


def _face_residual(coef, g, free, Z, constrained):
    g_eff = g.copy()
    g_eff[free] = Z @ (Z.T @ g[free])
    return float(np.max(np.abs(_natural_residual(coef, g_eff, constrained))))


class _State:
    __slots__ = ("coef", "eta", "f")

    def __init__(self, coef, eta, f):
        self.coef, self.eta, self.f = coef, eta, f


def _iterate(prob, st, constrained, ridge, max_iter, kkt_tol, cap, history, probe):
    """Projected Newton iterations from ``st`` (updated in place).

    Rows whose predictor sits on the cap are frozen: directions are
    restricted to the nullspace of those rows. A frozen row is released when
    its multiplier shows the gradient pulling it back inside, once the
    current face is solved. In probe mode the KKT test is
    ignored and iteration continues until no step improves the objective,
    which drives separated points onto the cap.

    Returns ``(iterations, converged, residual)``.
    """
    X = prob.X
    k = X.shape[1]
    improvement = 0.0
    res_norm = np.inf
    converged = False
    for it in range(max_iter + 1):
        coef, eta, f = st.coef, st.eta, st.f
        g = prob.grad_eta(eta)
        if ridge:
            g[1:] -= ridge * coef[1:]
        capped = np.abs(eta) >= cap * (1 - 1e-9)

        eps = min(1e-3, float(np.max(np.abs(_natural_residual(coef, g, constrained)))))
        binding = np.zeros(k, dtype=bool)
        if constrained:
            binding[1:] = (coef[1:] <= eps) & (g[1:] <= 0)
        free = ~binding
        Z = _nullspace(X[capped][:, free], int(free.sum()))
        if capped.any() and _face_residual(coef, g, free, Z, constrained) <= kkt_tol:
            # face solved: release the row whose multiplier pulls hardest
            # inward, one at a time so the active set cannot cycle
            idx = np.flatnonzero(capped)
            mu = np.linalg.lstsq(X[idx][:, free].T, g[free], rcond=None)[0]
            pull = mu * np.sign(eta[idx])
            j = int(np.argmin(pull))
            if pull[j] < -1e-12:
                capped[idx[j]] = False
                Z = _nullspace(X[capped][:, free], int(free.sum()))

        # reduced gradient on the free block; binding entries keep the raw one
        res_norm = _face_residual(coef, g, free, Z, constrained)
        small_step = improvement <= 1e-10 * (1.0 + abs(f))
        if not probe and res_norm <= min(kkt_tol, _KKT_TARGET) and small_step:
            converged = True
            break
        if it == max_iter or Z.shape[1] == 0:
            converged = not probe and res_norm <= kkt_tol
            break

        hw = prob.hess_weights(eta)
        gz = Z.T @ g[free]
        accepted = False
        for use_newton in (True, False):
            d = np.zeros(k)
            if not capped.any():
                d[binding] = -coef[binding]
            if use_newton:
                Xf = X[:, free] @ Z
                H = Xf.T @ (hw[:, None] * Xf)
                if ridge:
                    H = H + ridge * (Z.T @ Z)
                d[free] = Z @ _solve_psd(H, gz)
            else:
                d[free] = Z @ gz / max(1.0, float(np.max(np.abs(gz), initial=0.0)))
            Xd = X @ d
            Xd[capped] = 0.0
            t_cap = _cap_step(np.where(capped, 0.0, eta), Xd, cap)
            step = min(1.0, t_cap)
            while step > 1e-14:
                cand = _project(coef + step * d, constrained)
                eta_c = prob.eta(cand)
                if np.max(np.abs(eta_c)) <= cap * (1 + 1e-9):
                    f_c = prob.loglik_eta(eta_c) - 0.5 * ridge * float(cand[1:] @ cand[1:])
                    if f_c > f and f_c >= f + 1e-4 * float(g @ (cand - coef)):
                        accepted = True
                        break
                    # near the optimum the gain drops below rounding of f;
                    # take a full Newton step if it does not lose and shrinks the residual
                    if use_newton and step == 1.0 and f_c >= f:
                        g_c = prob.grad_eta(eta_c)
                        if ridge:
                            g_c[1:] -= ridge * cand[1:]
                        r_c = _natural_residual(cand, g_c, constrained)
                        if np.max(np.abs(r_c)) < res_norm:
                            accepted = True
                            break
                step *= 0.5
            if accepted:
                break
        if not accepted:
            converged = res_norm <= kkt_tol
            break
        improvement = f_c - f
        st.coef, st.eta, st.f = cand, eta_c, f_c
        history.append(f_c)
        if probe and improvement <= 1e-15 * (1.0 + abs(f_c)):
            break
    return it, converged, res_norm


# fitted probabilities this close to 0 or 1 trigger the separation probe
_PROBE_ETA = 15.0
# a binding cap is retried this many times wider before separation is declared
_WIDEN = 10.0


def fit_constrained(
    design: BasisDesign,
    support: PooledSupport,
    lam: float,
    constrained: bool = True,
    *,
    ridge: float = 0.0,
    max_iter: int = MAX_ITER,
    kkt_tol: float = KKT_TOL,
    eta_cap: float = ETA_CAP,
) -> FitReport:
    """Maximise the logistic objective, slopes ``>= 0`` when ``constrained``.

    Never raises on numerical trouble. A fit that runs out of iterations is
    returned with ``converged=False``. Under complete or quasi separation the
    maximiser does not exist; iterates are then pushed until the linear
    predictor reaches ``eta_cap`` and the report carries
    ``separation_flag=True``. The cap is a divergence guard, not part of the
    model: when it binds on data that are not separable the maximiser is
    finite, so the fit is repeated with a cap ten times wider and returned
    unflagged if that cap is slack. For a flagged fit
    ``converged`` certifies KKT conditions with capped rows held fixed, so its
    intercept gradient can be nonzero.
    """
    args = (design, support, lam, constrained, ridge, max_iter, kkt_tol)
    rep = _fit_capped(*args, eta_cap)
    if rep.separation_flag and not _separable(design, support, constrained):
        wide = _fit_capped(*args, _WIDEN * eta_cap)
        if wide.converged and not wide.separation_flag:
            return replace(wide, iterations=rep.iterations + wide.iterations)
    return rep


def _separable(design: BasisDesign, support: PooledSupport, constrained: bool) -> bool:
    """True when a recession direction exists, i.e. the maximiser is at infinity.

    Looks for ``d`` with ``x_i . d >= 0`` on rows holding only diseased
    counts, ``<= 0`` on rows holding only healthy counts and ``= 0`` on mixed
    rows, strictly nonzero somewhere; slopes of ``d`` are ``>= 0`` when
    constrained.
    """
    from scipy.optimize import linprog

    X = np.column_stack([np.ones(design.matrix.shape[0]), design.matrix])
    sign = np.where(support.a == 0, 1.0, np.where(support.b == 0, -1.0, 0.0))
    one_sided = sign != 0
    if not one_sided.any():
        return False
    S = X[one_sided] * sign[one_sided, None]
    mixed = X[~one_sided]
    lower = 0.0 if constrained else -1.0
    bounds = [(-1.0, 1.0)] + [(lower, 1.0)] * design.p
    res = linprog(
        -S.sum(axis=0),
        A_ub=-S,
        b_ub=np.zeros(S.shape[0]),
        A_eq=mixed if mixed.size else None,
        b_eq=np.zeros(mixed.shape[0]) if mixed.size else None,
        bounds=bounds,
        method="highs",
    )
    return bool(res.status == 0 and -res.fun > 1e-9)


def _fit_capped(design, support, lam, constrained, ridge, max_iter, kkt_tol, eta_cap):
    prob = _Problem(design, support, lam)
    X_orig = prob.X
    to_coef = None
    if not constrained and not ridge:
        # the likelihood depends on the design only through its column space;
        # an orthonormal basis of it keeps Newton well conditioned
        U, sv, Vt = np.linalg.svd(X_orig, full_matrices=False)
        rank = int(np.sum(sv > 1e-10 * sv[0]))
        prob.X = U[:, :rank]
        to_coef = Vt[:rank].T / sv[:rank]

    coef = np.zeros(prob.X.shape[1])
    eta = prob.eta(coef)
    st = _State(coef, eta, prob.loglik_eta(eta))
    history = [st.f]
    it, converged, res = _iterate(
        prob, st, constrained, ridge, max_iter, kkt_tol, eta_cap, history, probe=False
    )
    if np.max(np.abs(st.eta)) > _PROBE_ETA:
        extra, _, _ = _iterate(
            prob, st, constrained, ridge, 100, kkt_tol, eta_cap, history, probe=True
        )
        it += extra
        # re-certify after the probe moved the iterate
        _, converged, res = _iterate(
            prob, st, constrained, ridge, 0, kkt_tol, eta_cap, history, probe=False
        )
    if to_coef is not None:
        # certify in the original coordinates
        prob.X = X_orig
        st.coef = to_coef @ st.coef
        _, conv_orig, res = _iterate(
            prob, st, constrained, ridge, 0, kkt_tol, eta_cap, [], probe=False
        )
        converged = converged and conv_orig
    coef = st.coef
    separation = bool(np.max(np.abs(st.eta)) >= eta_cap * (1 - 1e-6))
    return FitReport(
        coefficients=CoefficientVector.from_array(coef),
        loglik=prob.loglik_eta(st.eta),
        iterations=it,
        converged=converged,
        separation_flag=separation,
        kkt_residual=res,
        constrained=constrained,
        history=tuple(history),
    )


def bic_value(loglik_value: float, n: int, df: int) -> float:
    return -2.0 * loglik_value + math.log(n) * df


def _argmin_bic(candidates: Sequence[int], bic: Sequence[float]) -> int:
    # smallest N wins ties; all-infinite falls back to the smallest candidate
    best = min(range(len(candidates)), key=lambda i: (bic[i], candidates[i]))
    return int(candidates[best])


def select_order_bic(
    support: PooledSupport,
    spec: TransformSpec,
    lam: float,
    candidates: Sequence[int] = DEFAULT_CANDIDATES,
) -> OrderSelection:
    """Pick N by BIC over unconstrained fits; df is intercept plus slope columns."""
    candidates = tuple(sorted(int(N) for N in candidates))
    if not candidates or candidates[0] < 1:
        raise ValueError("candidate orders must be a nonempty set of integers >= 1")
    bic, df = [], []
    for N in candidates:
        design = build_design(support, spec, N)
        rep = fit_constrained(design, support, lam, constrained=False)
        k = design.p + 1
        df.append(k)
        bic.append(bic_value(rep.loglik, support.n, k) if rep.converged else math.inf)
    return OrderSelection(candidates, tuple(bic), tuple(df), _argmin_bic(candidates, bic))
