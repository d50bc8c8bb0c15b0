"""
Model primitives for the isotropic Brown-Resnick space-time process.

The dependence function is the fractional family

    delta(v, u) = 2 * theta1 * v**alpha1 + 2 * theta2 * u**alpha2

and the extremogram (tail dependence coefficient) has the closed form

    chi(v, u) = 2 * (1 - Phi(sqrt(delta(v, u) / 2))).

The log-probit transform ``transform_T`` linearises chi in the log lag,
which is what the weighted least squares fit regresses on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np
from scipy import special


class ExtremoError(Exception):
    """Base class for errors raised by this package."""


class DomainError(ExtremoError, ValueError):
    """Argument outside the domain of a function."""


# ----------------------------------------------------------------------------
# Domain types
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class DependenceParams:
    """Parameters (theta1, alpha1, theta2, alpha2) of the dependence function."""

    theta1: float
    alpha1: float
    theta2: float
    alpha2: float

    def __post_init__(self):
        if not (self.theta1 > 0 and self.theta2 > 0):
            raise DomainError(f"theta1, theta2 must be positive: {self}")
        if not (0 < self.alpha1 <= 2 and 0 < self.alpha2 <= 2):
            raise DomainError(f"alpha1, alpha2 must lie in (0, 2]: {self}")

    def spatial(self):
        return self.theta1, self.alpha1

    def temporal(self):
        return self.theta2, self.alpha2

    def as_tuple(self):
        return (self.theta1, self.alpha1, self.theta2, self.alpha2)


@dataclass(frozen=True)
class GridSpec:
    """Square spatial grid {1..n}^2 observed at times {1..t_count}."""

    n: int
    t_count: int

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise DomainError(f"n must be a positive integer, got {self.n}")
        if int(self.t_count) != self.t_count or self.t_count < 1:
            raise DomainError(
                f"t_count must be a positive integer, got {self.t_count}")

    @property
    def shape(self):
        return (self.n, self.n, self.t_count)

    @property
    def size(self):
        return self.n * self.n * self.t_count

    def points(self):
        """Zero-based (i1, i2, t) coordinates in row-major order, shape (N, 3)."""
        idx = np.indices(self.shape).reshape(3, -1).T
        return idx.astype(np.int64)


def _is_sum_of_two_squares(m: int) -> bool:
    r = math.isqrt(m)
    for a in range(r + 1):
        b2 = m - a * a
        b = math.isqrt(b2)
        if b * b == b2:
            return True
    return False


@dataclass(frozen=True)
class LagSets:
    """
    Spatial lags V and temporal lags U used for estimation.

    Spatial lags are stored by their squared norm, an integer, so that lag
    classes are matched exactly. Use :meth:`from_distances` to build from
    real-valued lags such as ``[1, sqrt(2), 2]``.
    """

    spatial_sq: tuple
    temporal: tuple

    def __post_init__(self):
        sq = tuple(int(m) for m in self.spatial_sq)
        tmp = tuple(int(u) for u in self.temporal)
        if list(sq) != sorted(set(sq)) or any(m < 1 for m in sq):
            raise DomainError("spatial lags must be distinct, sorted and positive")
        if list(tmp) != sorted(set(tmp)) or any(u < 1 for u in tmp):
            raise DomainError("temporal lags must be distinct, sorted and >= 1")
        for m in sq:
            if not _is_sum_of_two_squares(m):
                raise DomainError(
                    f"spatial lag sqrt({m}) is not realisable on an integer grid")
        object.__setattr__(self, "spatial_sq", sq)
        object.__setattr__(self, "temporal", tmp)

    @classmethod
    def from_distances(cls, spatial: Iterable[float], temporal: Iterable[int]):
        sq = []
        for v in spatial:
            m = int(round(float(v) ** 2))
            if not math.isclose(math.sqrt(m), float(v), rel_tol=1e-9):
                raise DomainError(f"spatial lag {v} has no integer squared norm")
            sq.append(m)
        return cls(tuple(sq), tuple(int(u) for u in temporal))

    @property
    def spatial(self):
        return tuple(math.sqrt(m) for m in self.spatial_sq)

    def realisable_on(self, grid: GridSpec) -> "LagSets":
        """Subset of lags that have at least one pair on ``grid``."""
        n1 = grid.n - 1
        sq = tuple(m for m in self.spatial_sq
                   if any(a * a + b * b == m
                          for a in range(n1 + 1) for b in range(n1 + 1)))
        tmp = tuple(u for u in self.temporal if u < grid.t_count)
        return LagSets(sq, tmp)


# Lags used throughout the simulation study and the rainfall application.
PAPER_LAGS = LagSets(spatial_sq=(1, 2, 4, 5, 8, 9, 10, 13, 16, 17),
                     temporal=tuple(range(1, 11)))


# ----------------------------------------------------------------------------
# Normal distribution
# ----------------------------------------------------------------------------

def std_normal_cdf(x):
    """Standard normal CDF, accurate in both tails (erfc based)."""
    return special.ndtr(x)


def std_normal_quantile(p):
    """Standard normal quantile for ``0 < p < 1``."""
    p_arr = np.asarray(p, dtype=float)
    if np.any(~((p_arr > 0) & (p_arr < 1))):
        raise DomainError("normal quantile requires 0 < p < 1")
    return special.ndtri(p)


def _upper_quantile(p):
    # Phi^{-1}(1 - p) without forming 1 - p, which loses digits for small p.
    return -special.ndtri(p)


# ----------------------------------------------------------------------------
# Model functions
# ----------------------------------------------------------------------------

def delta(params: DependenceParams, v, u):
    """Dependence function 2 theta1 v^alpha1 + 2 theta2 u^alpha2."""
    v = np.asarray(v, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(v < 0) or np.any(u < 0):
        raise DomainError("lags must be nonnegative")
    out = (2.0 * params.theta1 * np.power(v, params.alpha1)
           + 2.0 * params.theta2 * np.power(u, params.alpha2))
    return out[()] if out.ndim == 0 else out


def chi_true(params: DependenceParams, v, u):
    """Theoretical extremogram 2 (1 - Phi(sqrt(delta / 2)))."""
    half = delta(params, v, u) / 2.0
    # 2 * (1 - Phi(x)) == 2 * Phi(-x), evaluated without cancellation
    return 2.0 * special.ndtr(-np.sqrt(half))


def transform_T(chi):
    """
    Log-probit transform 2 log(Phi^{-1}(1 - chi/2)).

    Applied to ``chi_true(params, v, 0)`` this returns
    ``log(theta1) + alpha1 * log(v)`` exactly.
    """
    c = np.asarray(chi, dtype=float)
    if np.any(~((c > 0) & (c < 1))):
        raise DomainError("transform_T requires 0 < chi < 1")
    out = 2.0 * np.log(_upper_quantile(c / 2.0))
    return out[()] if out.ndim == 0 else out


def bivariate_cdf(params: DependenceParams, v, u, x1, x2):
    """
    Joint CDF P(eta(0,0) <= x1, eta(h,u) <= x2) with ||h|| = v.

    At zero lag the two variables coincide and the limit exp(-1/min(x1, x2))
    is returned.
    """
    x1 = np.asarray(x1, dtype=float)
    x2 = np.asarray(x2, dtype=float)
    if np.any(x1 <= 0) or np.any(x2 <= 0):
        raise DomainError("bivariate_cdf requires x1, x2 > 0")
    d = np.asarray(delta(params, v, u), dtype=float)
    d, x1, x2 = np.broadcast_arrays(d, x1, x2)
    out = np.array(np.exp(-1.0 / np.minimum(x1, x2)), dtype=float)
    pos = d > 0
    if np.any(pos):
        dp, a, b = d[pos], x1[pos], x2[pos]
        s = np.sqrt(2.0 * dp)
        r = np.sqrt(dp / 2.0)
        la = np.log(b / a)
        with np.errstate(divide="ignore"):
            expo = (special.ndtr(la / s + r) / a
                    + special.ndtr(-la / s + r) / b)
        out[pos] = np.exp(-expo)
    return out[()] if out.ndim == 0 else out

