"""Command-line pipeline: ingest -> fit -> monitor -> report, plus simulate.

Every subcommand shares one configuration surface (flags mirror RunConfig
fields; flags override --config file values, which override the built-in
defaults) and writes its outputs under --out.  Exit codes: 0 success, 1
data or configuration error, 2 usage error, 3 numeric failure (particle
depletion, singular covariance, diverged integration).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import fields
from datetime import date
from pathlib import Path

import numpy as np

from . import plots, report
from .config import RunConfig, build_config
from .dynamics import IntegrationError, ParamVector
from .filter import (
    STREAM_PREDICTIVE,
    STREAM_SIMULATE,
    TotalDepletionError,
    run_filter,
    substream,
)
from .ingest import ObservationSeries, derive_observations, parse_jhu_csv
from .monitor import SWEEP_LAMBDAS, SingularCovarianceError, run_monitor_arrays

log = logging.getLogger(__name__)

_CONFIG_FIELDS = tuple(f.name for f in fields(RunConfig))


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="FILE", help="key = value config file")
    parser.add_argument("--data", help="input path (see each subcommand)")
    parser.add_argument("--region", help="Country/Region label to extract")
    parser.add_argument(
        "--start-date", dest="start_date", type=date.fromisoformat, metavar="YYYY-MM-DD",
        help="calendar date of day 0",
    )
    parser.add_argument("--days", type=int, help="keep only days 0..DAYS")
    parser.add_argument("--n-c", dest="n_c", type=int, help="initial candidate count")
    parser.add_argument("--n-p", dest="n_p", type=int, help="retained particles per day")
    parser.add_argument("--n-b", dest="n_b", type=int, help="children per particle")
    parser.add_argument("--substeps", type=int, help="integrator substeps per day")
    parser.add_argument("--sigma-log", dest="sigma_log", type=float, help="perturbation scale")
    parser.add_argument("--lam", type=float, help="chart smoothing coefficient")
    parser.add_argument("--limit", dest="control_limit", type=float, help="chart control limit")
    for rate in ("alpha", "beta", "gamma", "eta"):
        parser.add_argument(
            f"--mean-{rate}", dest=f"mean_{rate}", type=float, help=f"prior mean of {rate}"
        )
    for comp in ("s", "e", "i", "r", "d"):
        parser.add_argument(
            f"--init-{comp}", dest=f"init_{comp}", type=float,
            help=f"initial {comp.upper()} compartment",
        )
    parser.add_argument("--seed", dest="master_seed", type=int, help="master random seed")
    parser.add_argument("--out", help="output directory")
    parser.add_argument(
        "--prior-in-weight", dest="prior_in_weight", choices=("on", "off"),
        help="include the prior density factor in particle weights",
    )


def _config_from_args(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for name in _CONFIG_FIELDS:
        if hasattr(args, name):
            overrides[name] = getattr(args, name)
    if overrides.get("prior_in_weight") is not None:
        overrides["prior_in_weight"] = overrides["prior_in_weight"] == "on"
    return build_config(args.config, overrides)


def _outdir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_ingest(cfg: RunConfig, args) -> int:
    if not cfg.data:
        raise ValueError("ingest requires --data (channel directory or confirmed-channel CSV)")
    raw = parse_jhu_csv(cfg.data, cfg.region)
    series = derive_observations(raw, cfg.start_date)
    if cfg.days is not None:
        series = series.truncated(cfg.days)
    dest = _outdir(cfg) / "observations.csv"
    series.to_csv(dest)
    print(f"wrote {dest}: {len(series)} days from {series.start_date.isoformat()}")
    return 0


def cmd_fit(cfg: RunConfig, args) -> int:
    obs_path = cfg.data or str(Path(cfg.out) / "observations.csv")
    series = ObservationSeries.from_csv(obs_path)
    if cfg.days is not None:
        series = series.truncated(cfg.days)
    outputs = run_filter(
        series.observations, cfg.prior(), cfg.kernel(), cfg.init_state(), cfg.filter_config()
    )
    fits = [
        report.predictive_summary(o, substream(cfg.master_seed, o.day, STREAM_PREDICTIVE))
        for o in outputs
    ]
    out = _outdir(cfg)
    report.write_fit_csv(out / "fit.csv", series, fits)
    report.write_params_csv(out / "params.csv", outputs, series.start_date)
    np.save(out / "posterior.npy", np.stack([o.posterior_samples for o in outputs]))
    meta = {
        "start_date": series.start_date.isoformat(),
        "days": [o.day for o in outputs],
        "ess": [o.ess for o in outputs],
        "n_c": cfg.n_c,
        "n_p": cfg.n_p,
        "n_b": cfg.n_b,
        "substeps": cfg.substeps,
        "sigma_log": cfg.sigma_log,
        "prior_in_weight": cfg.prior_in_weight,
        "master_seed": cfg.master_seed,
        "prior_means": [cfg.mean_alpha, cfg.mean_beta, cfg.mean_gamma, cfg.mean_eta],
        "init_state": [cfg.init_s, cfg.init_e, cfg.init_i, cfg.init_r, cfg.init_d],
    }
    (out / "fit_meta.json").write_text(json.dumps(meta, sort_keys=True, indent=2) + "\n")
    ess = np.array(meta["ess"])
    print(
        f"fitted days {outputs[0].day}..{outputs[-1].day}"
        f" (ESS min {ess.min():.1f}, median {np.median(ess):.1f});"
        f" outputs in {out}"
    )
    return 0


def cmd_monitor(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    archive = out / "posterior.npy"
    if not archive.is_file():
        raise ValueError(f"{archive} not found; run fit first")
    samples = np.load(archive)
    meta = json.loads((out / "fit_meta.json").read_text())
    days = meta["days"]
    start = date.fromisoformat(meta["start_date"])
    records = run_monitor_arrays(days, samples, cfg.lam, cfg.control_limit)
    report.write_monitor_csv(out / "monitor.csv", records, start)
    signals = [r.day for r in records if r.signaled]
    mmeta = {"lam": cfg.lam, "limit": cfg.control_limit, "signal_days": signals}
    print(f"lam={cfg.lam:g} limit={cfg.control_limit:g}: signal days {signals or 'none'}")
    if args.sweep:
        mmeta["sweep"] = {}
        for lam in SWEEP_LAMBDAS:
            recs = run_monitor_arrays(days, samples, lam, cfg.control_limit)
            report.write_monitor_csv(out / f"monitor_lam_{lam:g}.csv", recs, start)
            sdays = [r.day for r in recs if r.signaled]
            mmeta["sweep"][f"{lam:g}"] = sdays
            print(f"lam={lam:g}: signal days {sdays or 'none'}")
    (out / "monitor_meta.json").write_text(json.dumps(mmeta, sort_keys=True, indent=2) + "\n")
    return 0


def cmd_report(cfg: RunConfig, args) -> int:
    out = Path(cfg.out)
    fit_path = out / "fit.csv"
    if not fit_path.is_file():
        raise ValueError(f"{fit_path} not found; run fit first")
    series, fits = report.read_fit_csv(fit_path)
    r2 = report.pseudo_r2(series, fits)
    cov = report.coverage(series, fits)
    monitor_path = out / "monitor.csv"
    if not monitor_path.is_file():
        raise ValueError(f"{monitor_path} not found; run monitor first")
    mcols = report.read_table_csv(monitor_path)
    meta_path = out / "monitor_meta.json"
    if meta_path.is_file():
        mmeta = json.loads(meta_path.read_text())
        lam, limit = mmeta["lam"], mmeta["limit"]
        signals = mmeta["signal_days"]
    else:
        lam, limit = cfg.lam, cfg.control_limit
        signals = [int(d) for d, s in zip(mcols["day"], mcols["signaled"]) if s]
    report.write_summary(out / "summary.txt", len(fits), r2, cov, lam, limit, signals)
    plots.render_fit(report.read_table_csv(fit_path), out / "fit.png")
    plots.render_params(report.read_table_csv(out / "params.csv"), out / "params.png")
    plots.render_monitor(mcols, limit, out / "monitor.png")
    print((out / "summary.txt").read_text(), end="")
    return 0


def cmd_simulate(cfg: RunConfig, args) -> int:
    base = ParamVector(args.alpha, args.beta, args.gamma, args.eta)
    days = cfg.days if cfg.days is not None else 60
    truth = base
    if args.shift_day is not None:
        if args.shift_day < 0:
            raise ValueError("--shift-day must be >= 0")
        shifted = ParamVector(
            args.shift_alpha if args.shift_alpha is not None else args.alpha,
            args.shift_beta if args.shift_beta is not None else args.beta,
            args.shift_gamma if args.shift_gamma is not None else args.gamma,
            args.shift_eta if args.shift_eta is not None else args.eta,
        )
        truth = [base if k < args.shift_day else shifted for k in range(days)]
    series = report.simulate(
        truth,
        cfg.init_state(),
        days,
        substream(cfg.master_seed, 0, STREAM_SIMULATE),
        substeps=cfg.substeps,
        start_date=cfg.start_date,
    )
    dest = _outdir(cfg) / "observations.csv"
    series.to_csv(dest)
    print(f"wrote {dest}: {len(series)} synthetic days")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="epimon",
        description="Sequential epidemic parameter estimation with change-point monitoring",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="extract a region and write the canonical series")
    _add_config_flags(p)
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("fit", help="run the particle filter over an observation series")
    _add_config_flags(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("monitor", help="run the change-detection chart on fitted samples")
    _add_config_flags(p)
    p.add_argument(
        "--sweep", action="store_true",
        help=f"also run lam in {{{', '.join(f'{x:g}' for x in SWEEP_LAMBDAS)}}}",
    )
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("report", help="write summary metrics and figures")
    _add_config_flags(p)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("simulate", help="generate a synthetic observation series")
    _add_config_flags(p)
    p.add_argument("--alpha", type=float, default=3e-7, help="true transmission rate")
    p.add_argument("--beta", type=float, default=1 / 7, help="true onset rate")
    p.add_argument("--gamma", type=float, default=1 / 14, help="true recovery rate")
    p.add_argument("--eta", type=float, default=1 / 200, help="true death rate")
    p.add_argument(
        "--shift-day", dest="shift_day", type=int,
        help="first day governed by the shifted rates (its observation lands one day later)",
    )
    for rate in ("alpha", "beta", "gamma", "eta"):
        p.add_argument(
            f"--shift-{rate}", dest=f"shift_{rate}", type=float,
            help=f"{rate} value from --shift-day onward",
        )
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        cfg = _config_from_args(args)
        return args.func(cfg, args)
    except (TotalDepletionError, SingularCovarianceError, IntegrationError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 3
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
