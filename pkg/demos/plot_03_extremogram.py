"""
Estimating the extremogram
==========================

Average the empirical spatial extremogram over time slices and the temporal
one over locations, with and without the bias correction, and compare to the
model values.
"""

import numpy as np

from extremo import DependenceParams, GridSpec, PAPER_LAGS, RngStream, chi_true, simulate_brown_resnick
from extremo.extremogram import estimate_spatial, estimate_temporal

params = DependenceParams(0.4, 1.5, 0.2, 1.0)
field = simulate_brown_resnick(GridSpec(20, 5), params, RngStream(7))
lags = PAPER_LAGS.realisable_on(field.grid)

sp = estimate_spatial(field, lags, quantile=0.9, beta1=0.3, correct=True)
truth = chi_true(params, np.array(sp.lags), 0.0)
print("lag    raw     corrected  true")
for v, r, c, t in zip(sp.lags, sp.raw_values, sp.values, truth):
    print(f"{v:5.3f}  {r:.4f}  {c:.4f}     {t:.4f}")

long_field = simulate_brown_resnick(GridSpec(4, 80), params, RngStream(8))
tp = estimate_temporal(long_field, PAPER_LAGS.realisable_on(long_field.grid), quantile=0.7,
                       correct=False)
print("temporal:", np.round(tp.values[:5], 3))
print("true:    ", np.round(chi_true(params, 0.0, np.array(tp.lags[:5])), 3))
