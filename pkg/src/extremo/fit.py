"""
Weighted least squares fit of (log theta, alpha) to a transformed extremogram.

The model is ``transform_T(chi(lag)) = log(theta) + alpha * log(lag)``. The
smoothness alpha is restricted to (0, 2]: if the unconstrained slope exceeds
2 the fit is projected onto alpha = 2, which for a quadratic objective is
the exact constrained minimiser.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .core import PAPER_LAGS, DomainError, LagSets, transform_T
from .extremogram import (EstimationError, ExtremogramEstimate,
                          estimate_spatial, estimate_temporal)

#: extremogram values at or below this are dropped before the transform
CHI_FLOOR = 1e-4

WEIGHT_RULES = ("exp2", "extremogram", "uniform")


@dataclass
class WlseProblem:
    """Regression data: x = log(lag), y = transform_T(chi), weights w > 0."""

    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray
    lags: tuple = ()
    dropped_lags: list = dc_field(default_factory=list)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.weights = np.asarray(self.weights, dtype=float)
        if not (self.x.shape == self.y.shape == self.weights.shape) or self.x.ndim != 1:
            raise DomainError("x, y and weights must be 1-d and of equal length")
        if self.x.size < 2:
            raise EstimationError(f"need at least 2 lags, got {self.x.size}")
        if np.any(~(self.weights > 0)):
            raise DomainError("weights must be positive")
        if np.unique(self.x).size < 2:
            raise EstimationError("singular design: all regressors are equal")

    @property
    def p_wx(self):
        """Weight-averaged regressor sum(w x) / sum(w)."""
        return math.fsum(self.weights * self.x) / math.fsum(self.weights)

    def objective(self, intercept, slope):
        r = self.y - intercept - slope * self.x
        return math.fsum(self.weights * r * r)


@dataclass
class WlseFit:
    """Fitted (theta, alpha) with the constraint status and diagnostics."""

    theta: float
    alpha: float
    constrained: bool
    unconstrained_alpha: float
    p_wx: float
    residual_sum: float
    intercept: float = float("nan")
    dropped_lags: list = dc_field(default_factory=list)
    weights_rule: str = ""
    threshold: float = float("nan")
    threshold_rule: str = ""

    @property
    def psi(self):
        """Parameter vector (log theta, alpha)."""
        return np.array([math.log(self.theta), self.alpha])

    def to_dict(self):
        return {
            "theta": self.theta,
            "alpha": self.alpha,
            "constrained": self.constrained,
            "unconstrained_alpha": self.unconstrained_alpha,
            "dropped_lags": [{"lag": lag, "reason": why} for lag, why in self.dropped_lags],
            "threshold": self.threshold,
            "threshold_rule": self.threshold_rule,
            "weights_rule": self.weights_rule,
            "p_wx": self.p_wx,
            "residual_sum": self.residual_sum,
        }


def wlse_unconstrained(problem: WlseProblem):
    """Solve the 2x2 weighted normal equations; returns ``(intercept, slope)``."""
    w, x, y = problem.weights, problem.x, problem.y
    sw = math.fsum(w)
    xbar = math.fsum(w * x) / sw
    ybar = math.fsum(w * y) / sw
    dx = x - xbar
    sxx = math.fsum(w * dx * dx)
    if not sxx > 0:
        raise EstimationError("singular design: all regressors are equal")
    slope = math.fsum(w * dx * (y - ybar)) / sxx
    return ybar - slope * xbar, slope


def constrain(intercept: float, slope: float, problem: WlseProblem) -> WlseFit:
    """
    Map an unconstrained solution into alpha in (0, 2].

    A slope above 2 is projected to alpha = 2 with the intercept moved by
    ``p_wx * (slope - 2)``. A nonpositive slope has no admissible projection
    and raises :class:`EstimationError`.
    """
    if not slope > 0:
        raise EstimationError(f"fitted slope {slope:.6g} is not positive")
    p_wx = problem.p_wx
    if slope > 2:
        c = intercept + p_wx * (slope - 2.0)
        alpha, constrained = 2.0, True
    else:
        c = intercept
        alpha, constrained = slope, False
    return WlseFit(theta=math.exp(c), alpha=alpha, constrained=constrained,
                   unconstrained_alpha=slope, p_wx=p_wx,
                   residual_sum=problem.objective(c, alpha), intercept=c,
                   dropped_lags=list(problem.dropped_lags))


def lag_weights(lags, rule: str, values=None):
    """Regression weights for ``lags`` under a named rule."""
    lags = np.asarray(lags, dtype=float)
    if rule == "exp2":
        return np.exp(-lags * lags)
    if rule == "extremogram":
        if values is None:
            raise DomainError("'extremogram' weights need extremogram values")
        return np.asarray(values, dtype=float).copy()
    if rule == "uniform":
        return np.ones_like(lags)
    raise DomainError(f"unknown weights rule {rule!r}; expected one of {WEIGHT_RULES}")


def build_problem(lags, values, weights_rule="exp2", chi_floor=CHI_FLOOR) -> WlseProblem:
    """Filter unusable lags and transform the rest into a regression problem."""
    lags = np.asarray(lags, dtype=float)
    values = np.asarray(values, dtype=float)
    weights = lag_weights(lags, weights_rule, values)
    keep = np.zeros(lags.size, dtype=bool)
    dropped = []
    for i, (lag, val) in enumerate(zip(lags, values)):
        if np.isnan(val):
            dropped.append((float(lag), "no exceedances"))
        elif val >= 1.0:
            dropped.append((float(lag), "value >= 1"))
        elif val <= chi_floor:
            dropped.append((float(lag), f"value <= {chi_floor:g}"))
        elif lag < 1.0:
            dropped.append((float(lag), "lag < 1"))
        else:
            keep[i] = True
    if keep.sum() < 2:
        raise EstimationError(
            f"fewer than 2 usable lags after filtering (dropped: {dropped})")
    return WlseProblem(np.log(lags[keep]), transform_T(values[keep]),
                       weights[keep], tuple(lags[keep].tolist()), dropped)


def fit_values(lags, values, weights_rule="exp2", chi_floor=CHI_FLOOR) -> WlseFit:
    """Fit (theta, alpha) to extremogram ``values`` observed at ``lags``."""
    problem = build_problem(lags, values, weights_rule, chi_floor)
    c, a = wlse_unconstrained(problem)
    fit = constrain(c, a, problem)
    fit.weights_rule = weights_rule
    return fit


def fit_axis(estimate: ExtremogramEstimate, weights_rule="exp2",
             chi_floor=CHI_FLOOR) -> WlseFit:
    """Fit the spatial or temporal parameter pair from an averaged extremogram."""
    fit = fit_values(estimate.lags, estimate.values, weights_rule, chi_floor)
    fit.threshold = estimate.threshold_q
    fit.threshold_rule = estimate.threshold_rule
    return fit


@dataclass(frozen=True)
class FitConfig:
    """
    Full estimation recipe for one axis of a field.

    ``quantile=None`` switches the threshold to q = m^2 with the axis
    scaling sequence m (n^beta in space, T^(beta/2) in time).
    """

    lags: LagSets = PAPER_LAGS
    quantile: float | None = 0.9
    beta: float = 0.3
    weights_rule: str = "exp2"
    bias_correct: bool = True

    def to_dict(self):
        return {"spatial_lags_sq": list(self.lags.spatial_sq),
                "temporal_lags": list(self.lags.temporal),
                "quantile": self.quantile, "beta": self.beta,
                "weights_rule": self.weights_rule,
                "bias_correct": self.bias_correct}


def estimate_axis(field, axis: str, config: FitConfig) -> ExtremogramEstimate:
    """Averaged extremogram of ``field`` along ``axis`` at the lags realisable on it."""
    lags = config.lags.realisable_on(field.grid)
    if axis == "spatial":
        return estimate_spatial(field, lags, config.quantile, config.beta,
                                config.bias_correct)
    if axis == "temporal":
        return estimate_temporal(field, lags, config.quantile, config.beta,
                                 config.bias_correct)
    raise DomainError(f"unknown axis {axis!r}")


def fit_field(field, axis: str, config: FitConfig):
    """Estimate the extremogram and fit it; returns ``(WlseFit, estimate)``."""
    est = estimate_axis(field, axis, config)
    return fit_axis(est, config.weights_rule), est
