"""Independent reference implementations used by the tests."""

import math

import numpy as np


def brute_spatial(values, t, lag_sq, q):
    """Spatial extremogram of slice t by a direct loop over all location pairs."""
    n = values.shape[0]
    locs = [(i1, i2) for i1 in range(n) for i2 in range(n)]
    pairs = joint = 0
    for a in locs:
        for b in locs:
            if (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 != lag_sq:
                continue
            pairs += 1
            joint += values[a[0], a[1], t] > q and values[b[0], b[1], t] > q
    single = sum(values[a[0], a[1], t] > q for a in locs)
    if pairs == 0:
        raise ValueError("lag not realisable")
    if single == 0:
        return math.nan
    return (joint / pairs) / (single / len(locs))


def brute_temporal(series, u, q):
    """Temporal extremogram of one series by a direct loop."""
    T = len(series)
    single = sum(x > q for x in series)
    if single == 0:
        return math.nan
    joint = sum(series[k] > q and series[k + u] > q for k in range(T - u))
    return (joint / (T - u)) / (single / T)


def brute_pair_count(n, lag_sq):
    return sum(1 for a1 in range(n) for a2 in range(n) for b1 in range(n) for b2 in range(n)
               if (a1 - b1) ** 2 + (a2 - b2) ** 2 == lag_sq)


def grid_search_alpha(x, y, w, step=1e-4):
    """
    Minimum of sum w (y - C - a x)^2 over a in (0, 2] on a grid of step ``step``.

    For fixed a the optimal C is the weighted mean of y - a x.
    """
    x, y, w = (np.asarray(v, dtype=float) for v in (x, y, w))
    alphas = np.arange(1, int(round(2 / step)) + 1) * step
    sw = w.sum()
    ybar = (w * y).sum() / sw
    xbar = (w * x).sum() / sw
    best = math.inf
    best_a = math.nan
    for chunk in np.array_split(alphas, max(1, alphas.size // 2000)):
        c = ybar - chunk * xbar
        r = y[None, :] - c[:, None] - chunk[:, None] * x[None, :]
        obj = (w[None, :] * r * r).sum(axis=1)
        k = int(np.argmin(obj))
        if obj[k] < best:
            best, best_a = float(obj[k]), float(chunk[k])
    return best, best_a
