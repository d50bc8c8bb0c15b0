"""
Space-time extremes for Brown-Resnick processes.

Exact simulation, empirical extremograms with bias correction, weighted
least squares fits of the dependence parameters, subsampling confidence
intervals and permutation tests for extremal independence.
"""

from .core import (PAPER_LAGS, DependenceParams, DomainError, ExtremoError, GridSpec,
                   LagSets, bivariate_cdf, chi_true, delta, transform_T)
from .extremogram import (EstimationError, ExtremogramEstimate, LagClassIndex,
                          bias_correct, empirical_spatial_extremogram,
                          empirical_temporal_extremogram, enumerate_spatial_lag_pairs,
                          estimate_spatial, estimate_temporal, threshold_from_quantile)
from .fit import FitConfig, WlseFit, WlseProblem, constrain, fit_axis, fit_field, fit_values, wlse_unconstrained
from .inference import (BlockScheme, ConfidenceRegion, PermutationEnvelope, enumerate_blocks,
                        inf_quantile, permutation_test, subsample_ci)
from .io import frechet_transform, ingest_csv, write_field_csv
from .simulate import (RngStream, SpaceTimeField, add_observational_noise,
                       build_variogram_covariance, sample_increment_field,
                       simulate_brown_resnick)
from .study import StudyConfig, StudySummary, desk_config, paper_config, run_study

__version__ = "0.1.0"
