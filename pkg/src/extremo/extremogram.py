"""
Empirical spatial and temporal extremograms on gridded space-time data.

All estimators take the event set A = B = (q, inf), i.e. they estimate the
tail dependence coefficient chi at each lag. Spatial lag classes are
matched on integer squared norms, never on floating point distances.

The slice estimators accept arrays with arbitrary leading axes in front
of ``(n, n, T)``, which the permutation test uses to batch replicates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from .core import DomainError, ExtremoError, GridSpec, LagSets
from .simulate import SpaceTimeField


class EstimationError(ExtremoError):
    """An estimator has no data to work with."""


# ----------------------------------------------------------------------------
# Lag classes
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class LagClassIndex:
    """
    Ordered location pairs per spatial lag on an ``n x n`` grid.

    Pairs are stored implicitly through integer offset vectors ``h`` with
    ``|h|^2 = v^2``; :meth:`pairs` expands them when an explicit list is needed.
    """

    n: int
    lags_sq: tuple
    offsets: dict
    pair_counts: tuple

    @property
    def lags(self):
        return tuple(math.sqrt(m) for m in self.lags_sq)

    def pairs(self, lag_sq: int):
        """Ordered pairs ``(i, j)`` of zero-based row-major location indices."""
        n = self.n
        out = []
        for a, b in self.offsets[lag_sq]:
            for i1 in range(max(0, -a), n - max(0, a)):
                for i2 in range(max(0, -b), n - max(0, b)):
                    out.append((i1 * n + i2, (i1 + a) * n + (i2 + b)))
        return out


def enumerate_spatial_lag_pairs(grid: GridSpec, lags: LagSets) -> LagClassIndex:
    """Build the lag classes N(v) for every v in ``lags`` (ordered pairs)."""
    n = grid.n
    offsets = {}
    counts = []
    for m in lags.spatial_sq:
        hs = [(a, b) for a in range(-(n - 1), n) for b in range(-(n - 1), n)
              if a * a + b * b == m]
        if not hs:
            raise DomainError(
                f"spatial lag sqrt({m}) has no pair on a {n}x{n} grid")
        offsets[m] = tuple(hs)
        counts.append(sum((n - abs(a)) * (n - abs(b)) for a, b in hs))
    return LagClassIndex(n, tuple(lags.spatial_sq), offsets, tuple(counts))


# ----------------------------------------------------------------------------
# Thresholds
# ----------------------------------------------------------------------------

def threshold_from_quantile(field, level: float) -> float:
    """
    Empirical quantile of all field values, lower order statistic.

    Returns the ``ceil(level * N)``-th smallest value.
    """
    if not 0 < level < 1:
        raise DomainError(f"quantile level must lie in (0, 1), got {level}")
    values = field.values if isinstance(field, SpaceTimeField) else np.asarray(field)
    flat = np.sort(values, axis=None)
    # round away float noise such as 0.7 * 10 = 7.000000000000001
    k = math.ceil(round(level * flat.size, 9))
    k = min(max(k, 1), flat.size)
    return float(flat[k - 1])


def scaling_m(size: int, beta: float, axis: str) -> float:
    """m_n = n^beta for the spatial axis, T^(beta/2) for the temporal one."""
    if axis == "spatial":
        return float(size) ** beta
    if axis == "temporal":
        return float(size) ** (beta / 2.0)
    raise DomainError(f"unknown axis {axis!r}")


# ----------------------------------------------------------------------------
# Slice estimators
# ----------------------------------------------------------------------------

def _overlap(shift, n):
    return slice(max(0, -shift), n - max(0, shift)), slice(max(0, shift), n - max(0, -shift))


def spatial_joint_counts(exceed, index: LagClassIndex):
    """
    Joint exceedance counts summed over N(v), shape ``(..., T, n_lags)``.

    ``exceed`` is a boolean array ``(..., n, n, T)``.
    """
    exceed = np.asarray(exceed)
    lead = exceed.shape[:-3]
    T = exceed.shape[-1]
    n = index.n
    out = np.zeros(lead + (T, len(index.lags_sq)), dtype=np.int64)
    for li, m in enumerate(index.lags_sq):
        total = np.zeros(lead + (T,), dtype=np.int64)
        for a, b in index.offsets[m]:
            # (i, j) and (j, i) are both in N(v); count one direction twice
            if a < 0 or (a == 0 and b < 0):
                continue
            sa, da = _overlap(a, n)
            sb, db = _overlap(b, n)
            joint = exceed[..., sa, sb, :] & exceed[..., da, db, :]
            total += 2 * joint.sum(axis=(-3, -2))
        out[..., li] = total
    return out


def spatial_extremogram_slices(values, index: LagClassIndex, q: float):
    """
    Empirical spatial extremogram for every time slice.

    Returns an array ``(..., T, n_lags)``; NaN where a slice has no exceedance.
    """
    values = np.asarray(values)
    exceed = values > q
    n2 = index.n * index.n
    num = spatial_joint_counts(exceed, index) / np.asarray(index.pair_counts, float)
    den = exceed.sum(axis=(-3, -2)) / n2
    with np.errstate(invalid="ignore", divide="ignore"):
        ratio = num / den[..., None]
    ratio[np.broadcast_to(den[..., None] == 0, ratio.shape)] = np.nan
    return ratio


def empirical_spatial_extremogram(field: SpaceTimeField, t: int,
                                  index: LagClassIndex, q: float):
    """Spatial extremogram of time slice ``t`` (zero-based); NaN marks missing."""
    if not q > 0:
        raise DomainError("threshold q must be positive")
    return spatial_extremogram_slices(field.values[:, :, t:t + 1], index, q)[0]


def temporal_extremogram_slices(values, lags_u, q: float):
    """
    Empirical temporal extremogram at every location.

    Returns an array ``(..., n, n, n_lags)``; NaN where a series has no
    exceedance.
    """
    values = np.asarray(values)
    exceed = values > q
    T = exceed.shape[-1]
    den = exceed.sum(axis=-1) / T
    out = np.empty(exceed.shape[:-1] + (len(lags_u),))
    for li, u in enumerate(lags_u):
        if not 1 <= u < T:
            raise DomainError(f"temporal lag {u} needs 1 <= u < T={T}")
        joint = exceed[..., :T - u] & exceed[..., u:]
        out[..., li] = joint.sum(axis=-1) / (T - u)
    with np.errstate(invalid="ignore", divide="ignore"):
        out = out / den[..., None]
    out[np.broadcast_to(den[..., None] == 0, out.shape)] = np.nan
    return out


def empirical_temporal_extremogram(field: SpaceTimeField, s, u: int, q: float):
    """Temporal extremogram at location ``s = (i1, i2)`` (zero-based) and lag ``u``."""
    if not q > 0:
        raise DomainError("threshold q must be positive")
    series = field.values[s[0], s[1], :]
    return float(temporal_extremogram_slices(series, [u], q)[0])


# ----------------------------------------------------------------------------
# Averages and bias correction
# ----------------------------------------------------------------------------

@dataclass
class ExtremogramEstimate:
    """Averaged (possibly bias corrected) extremogram along one axis."""

    axis: str
    lags: tuple
    values: np.ndarray
    threshold_q: float
    threshold_rule: str
    pair_or_time_counts: tuple
    slices: np.ndarray
    bias_corrected: bool = False
    m_n: float | None = None
    raw_values: np.ndarray | None = dc_field(default=None, repr=False)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.slices = np.asarray(self.slices, dtype=int)
        if any(b <= a for a, b in zip(self.lags, self.lags[1:])):
            raise DomainError("lags must be strictly increasing")
        if self.bias_corrected and self.m_n is None:
            raise DomainError("bias corrected estimate needs m_n")
        if self.raw_values is None:
            self.raw_values = self.values.copy()


def _average(slices):
    arr = np.asarray(slices, dtype=float).reshape(-1, slices.shape[-1])
    ok = ~np.isnan(arr)
    counts = ok.sum(axis=0)
    if np.any(counts == 0):
        bad = np.flatnonzero(counts == 0).tolist()
        raise EstimationError(f"every slice is missing at lag positions {bad}")
    means = np.where(ok, arr, 0.0).sum(axis=0) / counts
    return means, counts


def average_spatial(per_time, lags, *, threshold_q=float("nan"),
                    threshold_rule="", pair_counts=(), m_n=None,
                    bias_corrected=False, raw=None) -> ExtremogramEstimate:
    """Mean over time slices, skipping missing ones; ``per_time`` is ``(T, n_lags)``."""
    means, counts = _average(np.asarray(per_time))
    raw_means = None if raw is None else _average(np.asarray(raw))[0]
    return ExtremogramEstimate("spatial", tuple(lags), means, threshold_q,
                               threshold_rule, tuple(pair_counts), counts,
                               bias_corrected, m_n, raw_means)


def average_temporal(per_location, lags, *, threshold_q=float("nan"),
                     threshold_rule="", time_counts=(), m_n=None,
                     bias_corrected=False, raw=None) -> ExtremogramEstimate:
    """Mean over locations, skipping missing ones; ``per_location`` is ``(..., n_lags)``."""
    means, counts = _average(np.asarray(per_location))
    raw_means = None if raw is None else _average(np.asarray(raw))[0]
    return ExtremogramEstimate("temporal", tuple(lags), means, threshold_q,
                               threshold_rule, tuple(time_counts), counts,
                               bias_corrected, m_n, raw_means)


def bias_correct(chi_hat, m_n: float, beta1: float):
    """
    Remove the leading pre-asymptotic bias (chi - 2)(chi - 1) / (2 m_n^2).

    The correction applies for ``beta1`` in (1/5, 1/3]; for ``beta1`` in
    (1/3, 1/2) the estimate is returned unchanged.
    """
    if not 0.2 < beta1 < 0.5:
        raise DomainError(f"beta1 must lie in (1/5, 1/2), got {beta1}")
    if not m_n > 0:
        raise DomainError("m_n must be positive")
    chi = np.asarray(chi_hat, dtype=float)
    if beta1 > 1.0 / 3.0:
        out = chi.copy()
    else:
        out = chi - (chi - 2.0) * (chi - 1.0) / (2.0 * m_n * m_n)
    return out[()] if out.ndim == 0 else out


# ----------------------------------------------------------------------------
# Whole-field estimates
# ----------------------------------------------------------------------------

def resolve_threshold(field: SpaceTimeField, axis: str, quantile=None,
                      beta=0.3):
    """
    Threshold q and its description.

    With ``quantile`` set, q is the empirical quantile of the field; otherwise
    q = m^2 with m the axis scaling sequence.
    """
    if quantile is not None:
        return threshold_from_quantile(field, quantile), f"quantile:{quantile:g}"
    size = field.grid.n if axis == "spatial" else field.grid.t_count
    m = scaling_m(size, beta, axis)
    return m * m, f"m_n:beta={beta:g}"


def correction_scale(q: float) -> float:
    """
    m_n used in the bias correction, sqrt(q).

    Under the m-based rule q = m_n^2, so this is m_n itself; under an
    empirical-quantile rule it is the scale the threshold actually sits at.
    """
    return math.sqrt(q)


def estimate_spatial(field: SpaceTimeField, lags: LagSets, quantile=0.9,
                     beta1=0.3, correct=True, index=None) -> ExtremogramEstimate:
    """
    Averaged spatial extremogram of ``field`` at the lags in ``lags.spatial_sq``.

    The bias correction is applied per time slice before averaging, with
    m_n = sqrt(q) (equal to n^beta1 under the m-based threshold rule).
    """
    index = index or enumerate_spatial_lag_pairs(field.grid, lags)
    q, rule = resolve_threshold(field, "spatial", quantile, beta1)
    raw = spatial_extremogram_slices(field.values, index, q)
    m_n = correction_scale(q)
    if correct:
        corr = bias_correct(raw, m_n, beta1)
        return average_spatial(corr, index.lags, threshold_q=q, threshold_rule=rule,
                               pair_counts=index.pair_counts, m_n=m_n,
                               bias_corrected=True, raw=raw)
    return average_spatial(raw, index.lags, threshold_q=q, threshold_rule=rule,
                           pair_counts=index.pair_counts, m_n=m_n)


def estimate_temporal(field: SpaceTimeField, lags: LagSets, quantile=0.7,
                      beta=0.3, correct=False) -> ExtremogramEstimate:
    """
    Averaged temporal extremogram of ``field`` at the lags in ``lags.temporal``.

    Lags with ``u >= T`` are rejected. Bias correction (m = sqrt(q)) is
    off by default.
    """
    T = field.grid.t_count
    q, rule = resolve_threshold(field, "temporal", quantile, beta)
    us = list(lags.temporal)
    raw = temporal_extremogram_slices(field.values, us, q)
    m = correction_scale(q)
    counts = tuple(T - u for u in us)
    lag_vals = tuple(float(u) for u in us)
    if correct:
        corr = bias_correct(raw, m, beta)
        return average_temporal(corr, lag_vals, threshold_q=q, threshold_rule=rule,
                                time_counts=counts, m_n=m, bias_corrected=True,
                                raw=raw)
    return average_temporal(raw, lag_vals, threshold_q=q, threshold_rule=rule,
                            time_counts=counts, m_n=m)
