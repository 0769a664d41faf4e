"""Two-sample containers, pooling and the [0, 1] coordinate maps.

Pooling merges observations by exact floating-point equality; round the
inputs beforehand if the measurement precision warrants it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DegenerateSupport, InvalidData, NonPositiveValues

SINGLE = "single"
DUAL = "dual"
MODES = (SINGLE, DUAL)


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class TwoSampleData:
    """Healthy (group 0) and diseased (group 1) biomarker values."""

    healthy: np.ndarray
    diseased: np.ndarray

    def __post_init__(self):
        h = _frozen(np.ravel(self.healthy))
        d = _frozen(np.ravel(self.diseased))
        if h.size < 2 or d.size < 2:
            raise InvalidData(
                f"need at least 2 observations per group, got n0={h.size}, n1={d.size}"
            )
        if not (np.all(np.isfinite(h)) and np.all(np.isfinite(d))):
            raise InvalidData("observations must be finite")
        object.__setattr__(self, "healthy", h)
        object.__setattr__(self, "diseased", d)

    @property
    def n0(self) -> int:
        return int(self.healthy.size)

    @property
    def n1(self) -> int:
        return int(self.diseased.size)

    @property
    def n(self) -> int:
        return self.n0 + self.n1

    @property
    def lam(self) -> float:
        """Diseased proportion ``n1 / n``."""
        return self.n1 / self.n

    @classmethod
    def from_records(cls, values, groups) -> "TwoSampleData":
        values = np.asarray(values, dtype=float)
        groups = np.asarray(groups)
        return cls(values[groups == 0], values[groups == 1])


@dataclass(frozen=True)
class PooledSupport:
    """Distinct pooled values ``t`` with per-group multiplicities."""

    t: np.ndarray
    a: np.ndarray
    b: np.ndarray

    @property
    def m(self) -> int:
        return int(self.t.size)

    @property
    def n0(self) -> int:
        return int(self.a.sum())

    @property
    def n1(self) -> int:
        return int(self.b.sum())

    @property
    def n(self) -> int:
        return self.n0 + self.n1

    @property
    def counts(self) -> np.ndarray:
        return self.a + self.b


def pool_and_count(data: TwoSampleData) -> PooledSupport:
    values = np.concatenate([data.healthy, data.diseased])
    t, inverse = np.unique(values, return_inverse=True)
    a = np.bincount(inverse[: data.n0], minlength=t.size)
    b = np.bincount(inverse[data.n0 :], minlength=t.size)
    for arr in (t, a, b):
        arr.setflags(write=False)
    return PooledSupport(t=t, a=a, b=b)


@dataclass(frozen=True)
class TransformSpec:
    """Endpoints of the min-max map, plus the log map in dual mode."""

    t_min: float
    t_max: float
    mode: str = SINGLE
    log_t_min: Optional[float] = field(default=None)
    log_t_max: Optional[float] = field(default=None)

    @property
    def dual(self) -> bool:
        return self.mode == DUAL


def default_mode(support: PooledSupport) -> str:
    """Dual when every pooled value is positive, single otherwise."""
    return DUAL if support.t[0] > 0 else SINGLE


def make_transform(support: PooledSupport, mode: str = DUAL) -> TransformSpec:
    if mode not in MODES:
        raise ValueError(f"unknown transform mode {mode!r}")
    t_min, t_max = float(support.t[0]), float(support.t[-1])
    if not t_max > t_min:
        raise DegenerateSupport("pooled sample has a single distinct value")
    if mode == SINGLE:
        return TransformSpec(t_min, t_max, SINGLE)
    if t_min <= 0:
        raise NonPositiveValues(
            f"dual mode needs positive values, smallest pooled value is {t_min}"
        )
    return TransformSpec(t_min, t_max, DUAL, math.log(t_min), math.log(t_max))


def apply_transform(x, spec: TransformSpec):
    """Map ``x`` into ``[0, 1]``; returns ``(x_star, z_star)``.

    ``z_star`` is ``None`` in single mode. Values outside the pooled range
    are clamped to the unit interval.
    """
    x = np.asarray(x, dtype=float)
    x_star = np.clip((x - spec.t_min) / (spec.t_max - spec.t_min), 0.0, 1.0)
    z_star = None
    if spec.dual:
        with np.errstate(divide="ignore", invalid="ignore"):
            logx = np.log(np.where(x > 0, x, spec.t_min))
        z_star = (logx - spec.log_t_min) / (spec.log_t_max - spec.log_t_min)
        z_star = np.clip(np.where(x > 0, z_star, 0.0), 0.0, 1.0)
    if x_star.ndim == 0:
        x_star = float(x_star)
        z_star = None if z_star is None else float(z_star)
    return x_star, z_star


def invert_transform(spec: TransformSpec, x_star):
    """Inverse of the min-max coordinate."""
    return spec.t_min + np.asarray(x_star, dtype=float) * (spec.t_max - spec.t_min)
