"""
The dependence model and its linearisation
==========================================

The extremogram of the space-time Brown-Resnick field is a closed-form
function of the lag. Applying the log-probit transform turns it into a line
in log-lag, which is what the estimator fits.
"""

import numpy as np

from extremo import DependenceParams, chi_true, transform_T

params = DependenceParams(theta1=0.4, alpha1=1.5, theta2=0.2, alpha2=1.0)

# spatial extremogram at a few distances, temporal lag zero
v = np.array([1.0, np.sqrt(2), 2.0, 3.0])
chi_v = chi_true(params, v, 0.0)
print("spatial chi:", np.round(chi_v, 4))

# the transform gives log(2 theta1) + alpha1 log v exactly
print("T(chi):      ", np.round(transform_T(chi_v), 6))
print("linear form: ", np.round(np.log(2 * 0.4) + 1.5 * np.log(v), 6))

# temporal extremogram, spatial lag zero
u = np.arange(1, 6)
print("temporal chi:", np.round(chi_true(params, 0.0, u), 4))
