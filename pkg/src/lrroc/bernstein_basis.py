"""Bernstein polynomials and the cumulative (monotone) basis.

Values are computed in log space, ``log C(N, l) + l log x + (N - l) log(1 - x)``,
so large orders neither overflow nor cancel; cumulative values come from the
regularized incomplete beta function. The cumulative basis
``B*_l = sum_{k >= l} B_k`` is nondecreasing in ``x`` for ``l >= 1``; a
design built from it turns "slopes >= 0" into "fitted function is
nondecreasing".
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import betainc, gammaln

from .data_model import PooledSupport, TransformSpec, apply_transform
from .errors import IndexOutOfRange


def _check_order(N: int) -> None:
    if N < 0:
        raise IndexOutOfRange(f"order must be nonnegative, got {N}")


def bernstein_all(x, N: int) -> np.ndarray:
    """All ``N + 1`` basis values; shape ``x.shape + (N + 1,)``."""
    _check_order(N)
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)[..., None]
    l = np.arange(N + 1)
    log_binom = gammaln(N + 1) - gammaln(l + 1) - gammaln(N - l + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logx = np.where(l > 0, l * np.log(x), 0.0)
        log1mx = np.where(N - l > 0, (N - l) * np.log1p(-x), 0.0)
    return np.exp(log_binom + logx + log1mx)


def bernstein(l: int, x, N: int):
    """``C(N, l) x^l (1 - x)^(N - l)``."""
    if not 0 <= l <= N:
        raise IndexOutOfRange(f"index {l} outside 0..{N}")
    out = bernstein_all(x, N)[..., l]
    return float(out) if out.ndim == 0 else out


def cumulative_all(x, N: int) -> np.ndarray:
    """``B*_0 .. B*_N`` stacked on the last axis. ``B*_0`` is exactly 1.

    ``B*_l(x; N)`` is the binomial upper tail ``P(Bin(N, x) >= l)``, i.e. the
    regularized incomplete beta ``I_x(l, N - l + 1)``; evaluating it directly
    avoids the rounding drift of a running sum, which can break monotonicity
    in ``x`` at moderate ``N``.
    """
    _check_order(N)
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)[..., None]
    l = np.arange(1, N + 1)
    tail = betainc(l, N - l + 1, x)
    return np.concatenate([np.ones_like(x), tail], axis=-1)


def cumulative_basis(l: int, x, N: int):
    if not 0 <= l <= N:
        raise IndexOutOfRange(f"index {l} outside 0..{N}")
    out = cumulative_all(x, N)[..., l]
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class BasisDesign:
    """Slope columns ``B*_1..B*_N`` (twice over in dual mode); no intercept."""

    order: int
    mode: str
    matrix: np.ndarray

    @property
    def rows(self) -> int:
        return int(self.matrix.shape[0])

    @property
    def p(self) -> int:
        return int(self.matrix.shape[1])


def design_rows(x, spec: TransformSpec, N: int) -> np.ndarray:
    """Slope-column values at arbitrary original-scale points."""
    if N < 1:
        raise IndexOutOfRange(f"design order must be >= 1, got {N}")
    x_star, z_star = apply_transform(np.atleast_1d(np.asarray(x, dtype=float)), spec)
    cols = [cumulative_all(x_star, N)[:, 1:]]
    if z_star is not None:
        cols.append(cumulative_all(z_star, N)[:, 1:])
    return np.hstack(cols)


def build_design(support: PooledSupport, spec: TransformSpec, N: int) -> BasisDesign:
    matrix = design_rows(support.t, spec, N)
    matrix.setflags(write=False)
    return BasisDesign(order=N, mode=spec.mode, matrix=matrix)
