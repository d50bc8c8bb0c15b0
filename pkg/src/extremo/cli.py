"""
Command line interface.

Subcommands mirror the library: ``simulate``, ``extremogram``, ``fit``,
``ci``, ``permtest`` and ``study``. Outputs are CSV (fields, extremograms,
envelopes) or JSON (fits, intervals, study summaries). Any library error
ends the process with status 1 and a one-line message on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from dataclasses import replace

import numpy as np

from .core import PAPER_LAGS, DependenceParams, ExtremoError, GridSpec, LagSets, chi_true
from .fit import WEIGHT_RULES, FitConfig, estimate_axis, fit_field, fit_values
from .inference import BlockScheme, permutation_test, subsample_ci
from .io import (frechet_transform, ingest_csv, jsonable, write_estimates_csv,
                 write_field_csv, write_json)
from .simulate import RngStream, add_observational_noise, simulate_brown_resnick
from .study import PRESETS, run_study

logger = logging.getLogger("extremo")


def _int_list(text):
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _quantile(text):
    if text.lower() in ("none", "m"):
        return None
    return float(text)


def _add_params(p, required=True):
    for name, default in zip(("theta1", "alpha1", "theta2", "alpha2"),
                             (0.4, 1.5, 0.2, 1.0)):
        p.add_argument(f"--{name}", type=float,
                       default=None if required else default, required=required)


def _add_lags(p):
    p.add_argument("--spatial-lags-sq", type=_int_list,
                   default=list(PAPER_LAGS.spatial_sq),
                   help="squared spatial lags, e.g. 1,2,4,5")
    p.add_argument("--temporal-lags", type=_int_list,
                   default=list(PAPER_LAGS.temporal))


def _add_estimation(p, quantile):
    p.add_argument("--quantile", type=_quantile, default=quantile,
                   help="empirical quantile level for the threshold; "
                        "'none' uses q = m_n^2")
    p.add_argument("--beta1", type=float, default=0.3)
    p.add_argument("--bias-correct", action=argparse.BooleanOptionalAction,
                   default=None, help="default: on for spatial, off for temporal")
    p.add_argument("--frechet", action="store_true",
                   help="rank-transform each location to unit Frechet margins first")


def _lags(args):
    return LagSets(tuple(args.spatial_lags_sq), tuple(args.temporal_lags))


def _params(args):
    return DependenceParams(args.theta1, args.alpha1, args.theta2, args.alpha2)


def _load(args):
    field = ingest_csv(args.input)
    return frechet_transform(field) if args.frechet else field


def _fit_config(args, axis):
    correct = args.bias_correct
    if correct is None:
        correct = axis == "spatial"
    return FitConfig(_lags(args), args.quantile, args.beta1,
                     getattr(args, "weights", "exp2"), correct)


def _emit_json(obj, out):
    if out:
        write_json(obj, out)
    else:
        print(json.dumps(jsonable(obj), indent=2, sort_keys=True))


def cmd_simulate(args):
    grid = GridSpec(args.n, args.t)
    base = RngStream(args.seed)
    field = simulate_brown_resnick(grid, _params(args), base.substream(0))
    if args.noise_sd > 0:
        field = add_observational_noise(field, args.noise_sd, base.substream(1))
    write_field_csv(field, args.out)


def cmd_extremogram(args):
    field = _load(args)
    axes = ("spatial", "temporal") if args.axis == "both" else (args.axis,)
    ests = [estimate_axis(field, ax, _fit_config(args, ax)) for ax in axes]
    write_estimates_csv(ests, args.out)


def cmd_fit(args):
    if args.oracle:
        params = _params(args)
        lags = _lags(args)
        if args.axis == "spatial":
            lag = np.asarray(lags.spatial)
            vals = chi_true(params, lag, 0.0)
        else:
            lag = np.asarray(lags.temporal, dtype=float)
            vals = chi_true(params, 0.0, lag)
        fit = fit_values(lag, vals, args.weights)
        fit.threshold_rule = "oracle"
        _emit_json(fit.to_dict(), args.out)
        return
    if not args.input:
        raise ExtremoError("fit needs --input or --oracle")
    fit, _ = fit_field(_load(args), args.axis, _fit_config(args, args.axis))
    _emit_json(fit.to_dict(), args.out)


def cmd_ci(args):
    field = _load(args)
    if args.axis == "spatial":
        scheme = BlockScheme(b_s=args.block, e_s=args.step)
    else:
        scheme = BlockScheme(b_t=args.block, e_t=args.step)
    region = subsample_ci(field, scheme, _fit_config(args, args.axis), args.level, args.axis)
    _emit_json(region.to_dict(), args.out)


def cmd_permtest(args):
    field = _load(args)
    env = permutation_test(field, _lags(args), args.quantile, args.n_perm,
                           args.band, RngStream(args.seed))
    sp_in, tp_in = env.inside()
    inside = np.concatenate([sp_in, tp_in])
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["axis", "lag", "observed", "lo", "hi", "inside"])
        for (axis, lag, obs, lo, hi), ok in zip(env.rows(), inside):
            w.writerow([axis, repr(float(lag)), repr(float(obs)), repr(float(lo)),
                        repr(float(hi)), int(ok)])


def cmd_study(args):
    overrides = {"seed": args.seed}
    for name in ("reps", "noise_sd", "q_spatial", "q_temporal", "beta1"):
        val = getattr(args, name)
        if val is not None:
            overrides[name] = val
    if args.weights:
        overrides["weights_rule"] = args.weights
    if args.temporal_bias_correct is not None:
        overrides["temporal_bias_correct"] = args.temporal_bias_correct
    if args.preset == "paper":
        cfg = PRESETS["paper"](args.scale, **overrides)
    else:
        cfg = PRESETS[args.preset](**overrides)
    if args.no_ci:
        cfg = replace(cfg, spatial_scheme=None, temporal_scheme=None)
    summary = run_study(cfg, args.workers)
    _emit_json(summary.to_dict(), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="extremo",
        description="Brown-Resnick space-time simulation and extremogram-based estimation.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate one field to CSV")
    p.add_argument("--n", type=int, required=True, help="spatial side length")
    p.add_argument("--t", type=int, required=True, help="number of time points")
    _add_params(p)
    p.add_argument("--noise-sd", type=float, default=0.0)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("extremogram", help="averaged empirical extremogram to CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--axis", choices=("spatial", "temporal", "both"), default="both")
    _add_lags(p)
    _add_estimation(p, 0.9)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_extremogram)

    p = sub.add_parser("fit", help="WLSE fit of one axis to JSON")
    p.add_argument("--input")
    p.add_argument("--oracle", action="store_true",
                   help="fit the theoretical extremogram of the given parameters")
    _add_params(p, required=False)
    p.add_argument("--axis", choices=("spatial", "temporal"), default="spatial")
    _add_lags(p)
    _add_estimation(p, 0.9)
    p.add_argument("--weights", choices=WEIGHT_RULES, default="exp2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("ci", help="subsampling confidence intervals to JSON")
    p.add_argument("--input", required=True)
    p.add_argument("--axis", choices=("spatial", "temporal"), default="spatial")
    p.add_argument("--block", type=int, required=True, help="block length b_s or b_t")
    p.add_argument("--step", type=int, required=True, help="block step e_s or e_t")
    p.add_argument("--level", type=float, default=0.95)
    _add_lags(p)
    _add_estimation(p, 0.9)
    p.add_argument("--weights", choices=WEIGHT_RULES, default="exp2")
    p.add_argument("--out")
    p.set_defaults(func=cmd_ci)

    p = sub.add_parser("permtest", help="permutation envelope for extremal independence")
    p.add_argument("--input", required=True)
    _add_lags(p)
    p.add_argument("--quantile", type=float, default=0.9)
    p.add_argument("--n-perm", type=int, default=1000)
    p.add_argument("--band", type=float, default=0.95)
    p.add_argument("--frechet", action="store_true")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_permtest)

    p = sub.add_parser("study", help="Monte Carlo study to JSON")
    p.add_argument("--preset", choices=sorted(PRESETS), default="desk")
    p.add_argument("--scale", type=float, default=1.0, help="paper preset only")
    p.add_argument("--reps", type=int)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--noise-sd", type=float)
    p.add_argument("--q-spatial", type=float)
    p.add_argument("--q-temporal", type=float)
    p.add_argument("--beta1", type=float)
    p.add_argument("--weights", choices=WEIGHT_RULES)
    p.add_argument("--temporal-bias-correct", action=argparse.BooleanOptionalAction,
                   default=None)
    p.add_argument("--no-ci", action="store_true", help="skip subsampling intervals")
    p.add_argument("--workers", type=int, help="process count (EXTREMO_THREADS overrides)")
    p.add_argument("--out")
    p.set_defaults(func=cmd_study)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ExtremoError, OSError) as exc:
        print(f"extremo {args.command}: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
