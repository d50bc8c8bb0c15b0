"""
Subsampling confidence intervals and permutation tests for extremal independence.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .core import DomainError, GridSpec, LagSets
from .extremogram import (EstimationError, enumerate_spatial_lag_pairs,
                          spatial_extremogram_slices, temporal_extremogram_slices,
                          threshold_from_quantile)
from .fit import FitConfig, WlseFit, fit_field
from .simulate import RngStream, SpaceTimeField, _as_generator

logger = logging.getLogger(__name__)

#: abort subsampling when more than this share of block fits fail
MAX_BLOCK_FAILURE_SHARE = 0.5


def inf_quantile(samples, level: float) -> float:
    """
    inf{x : F(x) >= level} for the empirical CDF F of ``samples``.

    This is the ``ceil(level * m)``-th order statistic of ``m`` samples.
    """
    xs = np.sort(np.asarray(samples, dtype=float).ravel())
    if xs.size == 0:
        raise EstimationError("empty sample")
    if not 0 < level <= 1:
        raise DomainError(f"level must lie in (0, 1], got {level}")
    k = math.ceil(round(level * xs.size, 9))
    return float(xs[min(max(k, 1), xs.size) - 1])


# ----------------------------------------------------------------------------
# Blocks
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class BlockScheme:
    """
    Block lengths and overlap steps for subsampling.

    The spatial scheme uses ``b_s x b_s`` blocks over the full time span,
    stepped by ``e_s``; the temporal scheme uses runs of ``b_t`` time points
    over the full grid, stepped by ``e_t``.
    """

    b_s: int | None = None
    e_s: int | None = None
    b_t: int | None = None
    e_t: int | None = None

    def counts(self, grid: GridSpec, axis: str) -> int:
        """Number of blocks per blocked axis, floor((n - b) / e) + 1."""
        if axis == "spatial":
            b, e, n = self.b_s, self.e_s, grid.n
        elif axis == "temporal":
            b, e, n = self.b_t, self.e_t, grid.t_count
        else:
            raise DomainError(f"unknown axis {axis!r}")
        if b is None or e is None:
            raise DomainError(f"{axis} scheme needs both a block length and a step")
        if not (1 <= b <= n and 1 <= e <= b):
            raise DomainError(
                f"invalid {axis} block scheme b={b}, e={e} for extent {n}")
        return (n - b) // e + 1

    def block_count(self, grid: GridSpec, axis: str) -> int:
        q = self.counts(grid, axis)
        return q * q if axis == "spatial" else q


def enumerate_blocks(grid: GridSpec, scheme: BlockScheme, axis: str):
    """
    Index blocks for subsampling, as tuples of three slices into the field.

    Spatial blocks are taken in row-major block order ``(i1, i2)``.
    """
    q = scheme.counts(grid, axis)
    blocks = []
    if axis == "spatial":
        b, e = scheme.b_s, scheme.e_s
        for i1 in range(q):
            for i2 in range(q):
                blocks.append((slice(i1 * e, i1 * e + b),
                               slice(i2 * e, i2 * e + b),
                               slice(0, grid.t_count)))
    else:
        b, e = scheme.b_t, scheme.e_t
        for i in range(q):
            blocks.append((slice(0, grid.n), slice(0, grid.n),
                           slice(i * e, i * e + b)))
    return blocks


# ----------------------------------------------------------------------------
# Subsampling confidence intervals
# ----------------------------------------------------------------------------

def rate(size: int, beta: float, axis: str) -> float:
    """Convergence rate tau = n / m_n = n^(1-beta); sqrt(T) replaces n in time."""
    base = float(size) if axis == "spatial" else math.sqrt(size)
    return base ** (1.0 - beta)


@dataclass
class SubsampleDistribution:
    """Scaled block deviations tau_b * ||psi_block - psi_full||."""

    deviations: np.ndarray
    tau_b: float
    tau_n: float
    beta1: float
    n_blocks: int
    failures: list

    def cdf(self, x):
        return float(np.mean(self.deviations <= x))


@dataclass
class ConfidenceRegion:
    """Interval pair read off the subsampling confidence ball for (log theta, alpha)."""

    c_quantile: float
    theta_interval: tuple
    alpha_interval: tuple
    level: float
    estimate: WlseFit
    distribution: SubsampleDistribution
    axis: str = "spatial"

    def to_dict(self):
        return {
            "axis": self.axis,
            "level": self.level,
            "theta": self.estimate.theta,
            "alpha": self.estimate.alpha,
            "constrained": self.estimate.constrained,
            "theta_interval": list(self.theta_interval),
            "alpha_interval": list(self.alpha_interval),
            "c_quantile": self.c_quantile,
            "tau_n": self.distribution.tau_n,
            "tau_b": self.distribution.tau_b,
            "n_blocks": self.distribution.n_blocks,
            "block_failures": len(self.distribution.failures),
        }


def interval_from_c(fit: WlseFit, c: float, tau_n: float):
    """theta and alpha intervals for a ball of radius c / tau_n around ``fit``."""
    r = c / tau_n
    theta_iv = (fit.theta * math.exp(-r), fit.theta * math.exp(r))
    # alpha lives in (0, 2]; a left end of 0 stands for the open boundary
    alpha_iv = (max(fit.alpha - r, 0.0), min(fit.alpha + r, 2.0))
    return theta_iv, alpha_iv


def subsample_ci(field: SpaceTimeField, scheme: BlockScheme,
                 config: FitConfig = FitConfig(), level: float = 0.95,
                 axis: str = "spatial", full_fit: WlseFit | None = None
                 ) -> ConfidenceRegion:
    """
    Subsampling confidence intervals for (theta, alpha) along ``axis``.

    The full estimation recipe (threshold, bias correction, fit) is re-run
    on every block. Failed block fits are skipped; more than half failing
    raises :class:`EstimationError`.
    """
    if not 0 < level < 1:
        raise DomainError(f"level must lie in (0, 1), got {level}")
    grid = field.grid
    blocks = enumerate_blocks(grid, scheme, axis)
    if full_fit is None:
        full_fit, _ = fit_field(field, axis, config)
    psi = full_fit.psi
    beta = config.beta
    if axis == "spatial":
        tau_n, tau_b = rate(grid.n, beta, axis), rate(scheme.b_s, beta, axis)
    else:
        tau_n, tau_b = rate(grid.t_count, beta, axis), rate(scheme.b_t, beta, axis)

    devs, failures = [], []
    for i, blk in enumerate(blocks):
        try:
            bfit, _ = fit_field(field.subfield(blk), axis, config)
        except (EstimationError, DomainError) as exc:
            failures.append((i, str(exc)))
            continue
        devs.append(tau_b * float(np.linalg.norm(bfit.psi - psi)))
    if len(failures) > MAX_BLOCK_FAILURE_SHARE * len(blocks):
        raise EstimationError(
            f"{len(failures)} of {len(blocks)} block fits failed; first: {failures[0][1]}")
    if failures:
        logger.info("%d of %d block fits failed", len(failures), len(blocks))
    dist = SubsampleDistribution(np.asarray(devs), tau_b, tau_n, beta,
                                 len(blocks), failures)
    c = inf_quantile(dist.deviations, level)
    theta_iv, alpha_iv = interval_from_c(full_fit, c, tau_n)
    return ConfidenceRegion(c, theta_iv, alpha_iv, level, full_fit, dist, axis)


# ----------------------------------------------------------------------------
# Permutation test
# ----------------------------------------------------------------------------

@dataclass
class PermutationEnvelope:
    """Pointwise permutation quantile bands for both extremogram axes."""

    spatial_lags: tuple
    temporal_lags: tuple
    spatial_observed: np.ndarray
    temporal_observed: np.ndarray
    spatial_lo: np.ndarray
    spatial_hi: np.ndarray
    temporal_lo: np.ndarray
    temporal_hi: np.ndarray
    band: float
    n_perm: int
    threshold: float

    def inside(self):
        """Boolean masks: observed value within [lo, hi] per lag."""
        sp = (self.spatial_observed >= self.spatial_lo) & (self.spatial_observed <= self.spatial_hi)
        tp = (self.temporal_observed >= self.temporal_lo) & (self.temporal_observed <= self.temporal_hi)
        return sp, tp

    def rows(self):
        for axis, lags, obs, lo, hi in (
                ("spatial", self.spatial_lags, self.spatial_observed,
                 self.spatial_lo, self.spatial_hi),
                ("temporal", self.temporal_lags, self.temporal_observed,
                 self.temporal_lo, self.temporal_hi)):
            for k, lag in enumerate(lags):
                yield axis, lag, obs[k], lo[k], hi[k]


def _nan_mean(arr, axis):
    ok = ~np.isnan(arr)
    cnt = ok.sum(axis=axis)
    tot = np.where(ok, arr, 0.0).sum(axis=axis)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(cnt > 0, tot / np.maximum(cnt, 1), np.nan)


def _band_quantiles(samples, band):
    lo_p = (1.0 - band) / 2.0
    lo, hi = [], []
    for col in samples.T:
        col = col[~np.isnan(col)]
        if col.size == 0:
            lo.append(np.nan)
            hi.append(np.nan)
        else:
            lo.append(inf_quantile(col, lo_p))
            hi.append(inf_quantile(col, 1.0 - lo_p))
    return np.asarray(lo), np.asarray(hi)


def permutation_test(field: SpaceTimeField, lags: LagSets, q_level: float = 0.9,
                     n_perm: int = 1000, band: float = 0.95, rng=None,
                     batch: int = 50) -> PermutationEnvelope:
    """
    Permutation envelope of the averaged spatial and temporal extremograms.

    All ``n^2 * T`` values are shuffled jointly, which destroys spatial and
    temporal dependence while keeping the marginal sample (and so the
    threshold) fixed.
    """
    if not 0 < band < 1:
        raise DomainError(f"band must lie in (0, 1), got {band}")
    if n_perm < 2.0 / (1.0 - band):
        raise DomainError(f"n_perm={n_perm} too small for band {band}")
    gen = _as_generator(rng if rng is not None else RngStream(0))
    lags = lags.realisable_on(field.grid)
    index = enumerate_spatial_lag_pairs(field.grid, lags)
    us = list(lags.temporal)
    q = threshold_from_quantile(field, q_level)

    vals = field.values
    sp_obs = _nan_mean(spatial_extremogram_slices(vals, index, q), axis=0)
    tp_obs = _nan_mean(temporal_extremogram_slices(vals, us, q).reshape(-1, len(us)), axis=0)

    flat = vals.ravel()
    sp_perm = np.empty((n_perm, len(index.lags_sq)))
    tp_perm = np.empty((n_perm, len(us)))
    done = 0
    while done < n_perm:
        k = min(batch, n_perm - done)
        stack = np.stack([flat[gen.permutation(flat.size)] for _ in range(k)])
        stack = stack.reshape((k,) + vals.shape)
        sp_perm[done:done + k] = _nan_mean(spatial_extremogram_slices(stack, index, q), axis=1)
        tp = temporal_extremogram_slices(stack, us, q).reshape(k, -1, len(us))
        tp_perm[done:done + k] = _nan_mean(tp, axis=1)
        done += k

    sp_lo, sp_hi = _band_quantiles(sp_perm, band)
    tp_lo, tp_hi = _band_quantiles(tp_perm, band)
    return PermutationEnvelope(index.lags, tuple(float(u) for u in us),
                               sp_obs, tp_obs, sp_lo, sp_hi, tp_lo, tp_hi,
                               band, n_perm, q)
