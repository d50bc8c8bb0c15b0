"""
Monte Carlo study: simulate, estimate, fit and summarise over replications.

Each replication simulates two fields, a spatially large one for the
spatial parameters and a temporally long one for the temporal parameters.
Random streams are derived from ``(seed, replication)`` so results do not
depend on the number of workers.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field as dc_field, replace

import numpy as np

from .core import PAPER_LAGS, DependenceParams, DomainError, ExtremoError, GridSpec, LagSets, chi_true
from .fit import FitConfig, fit_field
from .inference import BlockScheme, subsample_ci
from .simulate import (RngStream, add_observational_noise,
                       build_variogram_covariance, simulate_brown_resnick)

logger = logging.getLogger(__name__)

PARAM_NAMES = ("theta1", "alpha1", "theta2", "alpha2")
PAPER_PARAMS = DependenceParams(0.4, 1.5, 0.2, 1.0)


@dataclass(frozen=True)
class StudyConfig:
    grid_spatial: GridSpec
    grid_temporal: GridSpec
    params: DependenceParams = PAPER_PARAMS
    lags: LagSets = PAPER_LAGS
    reps: int = 30
    q_spatial: float = 0.9
    q_temporal: float = 0.7
    noise_sd: float = 0.0
    beta1: float = 0.3
    seed: int = 0
    weights_rule: str = "exp2"
    temporal_bias_correct: bool = True
    spatial_scheme: BlockScheme | None = None
    temporal_scheme: BlockScheme | None = None
    ci_level: float = 0.95

    def __post_init__(self):
        if self.reps < 1:
            raise DomainError("reps must be >= 1")
        for q in (self.q_spatial, self.q_temporal):
            if not 0 < q < 1:
                raise DomainError(f"quantile level {q} outside (0, 1)")
        if self.noise_sd < 0:
            raise DomainError("noise_sd must be nonnegative")

    def spatial_fit_config(self):
        return FitConfig(self.lags, self.q_spatial, self.beta1, self.weights_rule, True)

    def temporal_fit_config(self):
        return FitConfig(self.lags, self.q_temporal, self.beta1, self.weights_rule,
                         self.temporal_bias_correct)

    def echo(self):
        d = asdict(self)
        d["lags"] = {"spatial_sq": list(self.lags.spatial_sq),
                     "temporal": list(self.lags.temporal)}
        return d


def paper_config(scale: float = 1.0, **overrides) -> StudyConfig:
    """
    The published design, optionally shrunk.

    ``scale`` multiplies the spatial side (70), the spatial run's length
    (10) and the temporal run's length (300); block lengths shrink with them.
    """
    if not 0 < scale <= 1:
        raise DomainError("scale must lie in (0, 1]")
    n1 = max(4, round(70 * scale))
    t1 = max(2, round(10 * scale))
    t2 = max(12, round(300 * scale))
    cfg = StudyConfig(
        grid_spatial=GridSpec(n1, t1),
        grid_temporal=GridSpec(5, t2),
        reps=100,
        spatial_scheme=BlockScheme(b_s=max(2, round(50 * scale)), e_s=2),
        temporal_scheme=BlockScheme(b_t=max(11, round(200 * scale)), e_t=1),
    )
    return replace(cfg, **overrides)


def desk_config(**overrides) -> StudyConfig:
    """30x30x5 spatial run and 5x5x120 temporal run, 30 replications."""
    cfg = StudyConfig(
        grid_spatial=GridSpec(30, 5),
        grid_temporal=GridSpec(5, 120),
        reps=30,
        spatial_scheme=BlockScheme(b_s=21, e_s=2),
        temporal_scheme=BlockScheme(b_t=80, e_t=1),
    )
    return replace(cfg, **overrides)


PRESETS = {"paper": paper_config, "desk": desk_config}


@dataclass
class StudySummary:
    per_param: dict
    reps: list
    config_echo: dict = dc_field(default_factory=dict)

    def estimates(self, name):
        return np.array([r[name] for r in self.reps if r.get("error") is None])

    def to_dict(self):
        return {"per_param": self.per_param, "reps": self.reps,
                "config_echo": self.config_echo}


def summarize(records, params: DependenceParams):
    """Mean, RMSE and MAE per parameter over successful replications."""
    truth = dict(zip(PARAM_NAMES, params.as_tuple()))
    ok = [r for r in records if r.get("error") is None]
    out = {}
    for name in PARAM_NAMES:
        est = np.array([r[name] for r in ok], dtype=float)
        if est.size == 0:
            out[name] = {"mean": None, "rmse": None, "mae": None, "n": 0}
            continue
        err = est - truth[name]
        out[name] = {"mean": float(np.mean(est)),
                     "rmse": float(math.sqrt(np.mean(err * err))),
                     "mae": float(np.mean(np.abs(err))),
                     "n": int(est.size), "true": truth[name]}
    return out


_FACTOR_CACHE = {}


def _factorization(grid, params):
    key = (grid, params)
    if key not in _FACTOR_CACHE:
        if len(_FACTOR_CACHE) >= 2:
            _FACTOR_CACHE.clear()
        _FACTOR_CACHE[key] = build_variogram_covariance(grid, params)
    return _FACTOR_CACHE[key]


def _simulate(grid, params, stream):
    return simulate_brown_resnick(grid, params, stream,
                                  factorization=_factorization(grid, params))


def simulate_replication(config: StudyConfig, rep: int):
    """The noiseless ``(spatial, temporal)`` field pair of replication ``rep``."""
    base = RngStream(config.seed).substream(rep)
    return (_simulate(config.grid_spatial, config.params, base.substream(0)),
            _simulate(config.grid_temporal, config.params, base.substream(1)))


def run_replication(config: StudyConfig, rep: int, fields=None) -> dict:
    """
    One replication; never raises for estimation failures.

    ``fields`` may supply a pre-simulated ``(spatial, temporal)`` pair.
    """
    base = RngStream(config.seed).substream(rep)
    rec = {"rep": rep, "error": None}
    try:
        f_sp, f_tp = fields if fields is not None else simulate_replication(config, rep)
        if config.noise_sd > 0:
            f_sp = add_observational_noise(f_sp, config.noise_sd, base.substream(2))
            f_tp = add_observational_noise(f_tp, config.noise_sd, base.substream(3))

        sp_cfg = config.spatial_fit_config()
        tp_cfg = config.temporal_fit_config()
        sp_fit, sp_est = fit_field(f_sp, "spatial", sp_cfg)
        tp_fit, tp_est = fit_field(f_tp, "temporal", tp_cfg)
        rec.update(theta1=sp_fit.theta, alpha1=sp_fit.alpha,
                   theta2=tp_fit.theta, alpha2=tp_fit.alpha,
                   constrained1=sp_fit.constrained, constrained2=tp_fit.constrained,
                   spatial_lags=list(sp_est.lags),
                   spatial_chi_raw=sp_est.raw_values.tolist(),
                   spatial_chi_corrected=sp_est.values.tolist(),
                   spatial_chi_true=np.atleast_1d(
                       chi_true(config.params, np.array(sp_est.lags), 0.0)).tolist(),
                   temporal_lags=list(tp_est.lags),
                   temporal_chi_raw=tp_est.raw_values.tolist(),
                   temporal_chi_corrected=tp_est.values.tolist(),
                   temporal_chi_true=np.atleast_1d(
                       chi_true(config.params, 0.0, np.array(tp_est.lags))).tolist(),
                   threshold_spatial=sp_est.threshold_q,
                   threshold_temporal=tp_est.threshold_q)
    except ExtremoError as exc:
        rec["error"] = f"{type(exc).__name__}: {exc}"
        logger.warning("replication %d failed: %s", rep, exc)
        return rec
    # a failed interval does not void the point estimates
    for axis, scheme, fld, cfg, fit, suffix in (
            ("spatial", config.spatial_scheme, f_sp, sp_cfg, sp_fit, "1"),
            ("temporal", config.temporal_scheme, f_tp, tp_cfg, tp_fit, "2")):
        if scheme is None:
            continue
        try:
            ci = subsample_ci(fld, scheme, cfg, config.ci_level, axis, full_fit=fit)
        except ExtremoError as exc:
            rec[f"ci_error{suffix}"] = f"{type(exc).__name__}: {exc}"
            continue
        rec[f"ci_theta{suffix}"] = list(ci.theta_interval)
        rec[f"ci_alpha{suffix}"] = list(ci.alpha_interval)
    return rec


def worker_count(default=None) -> int:
    env = os.environ.get("EXTREMO_THREADS")
    if env:
        return max(1, int(env))
    return default or os.cpu_count() or 1


def _run_chunk(config, reps):
    return [run_replication(config, r) for r in reps]


def run_study(config: StudyConfig, workers: int | None = None) -> StudySummary:
    """
    Run ``config.reps`` replications and summarise them.

    Parameters
    ----------
    config : StudyConfig
    workers : int, optional
        Process count; ``EXTREMO_THREADS`` overrides the default of one
        process per CPU.
    """
    workers = workers or worker_count()
    workers = min(workers, config.reps)
    reps = list(range(config.reps))
    if workers <= 1:
        records = _run_chunk(config, reps)
    else:
        # one chunk per process so each builds its factorizations once
        chunks = [reps[i::workers] for i in range(workers)]
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = [r for part in pool.map(_run_chunk, [config] * workers, chunks)
                       for r in part]
    records.sort(key=lambda r: r["rep"])
    return StudySummary(summarize(records, config.params), records, config.echo())
