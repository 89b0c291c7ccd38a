"""Posterior-predictive summaries, fit metrics, synthetic data, report files.

Predictive bands come from one Poisson draw per particle per channel at that
particle's own one-day-ahead means.  Quantiles everywhere are nearest-rank
order statistics (value at rank ceil(q*n) of the sorted sample): inclusive,
deterministic, and exact for discrete counts.

Fit quality is summarized two ways: a pooled pseudo-R^2 comparing predictive
medians to the observations across all three channels in a single ratio,
and the proportion of channel-day observations falling inside the central
95% band (inclusive bounds, denominator 3n).

The file writers render floats with repr(), the shortest round-trip
representation, so identical inputs give byte-identical files.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .dynamics import ParamVector, StateVector, integrate_day
from .filter import FilterOutput
from .ingest import ObservationSeries
from .likelihood import Observation


class UndefinedMetricError(ValueError):
    """Metric denominator vanished (constant observations)."""


@dataclass(frozen=True)
class PredictiveSummary:
    """Central predictive band for one day, channel order (I, R, D)."""

    day: int
    median: np.ndarray
    lower95: np.ndarray
    upper95: np.ndarray

    def __post_init__(self):
        if not ((self.lower95 <= self.median).all() and (self.median <= self.upper95).all()):
            raise ValueError("band must satisfy lower95 <= median <= upper95")


def nearest_rank(values: np.ndarray, q: float) -> float:
    """Order statistic at rank ceil(q * n) of the sorted sample."""
    if not 0.0 < q <= 1.0:
        raise ValueError("q must be in (0, 1]")
    v = np.sort(np.asarray(values).ravel())
    if v.size == 0:
        raise ValueError("empty sample")
    rank = max(1, math.ceil(q * v.size))
    return float(v[rank - 1])


def predictive_summary(samples: FilterOutput, rng_seed) -> PredictiveSummary:
    """Band of Poisson draws at each particle's predictive means.

    One draw per particle per channel; the 2.5%, 50% and 97.5% nearest-rank
    quantiles of the n_p draws form the band.
    """
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    means = samples.predictive_means[:, 2:5]
    draws = rng.poisson(means)
    med = np.array([nearest_rank(draws[:, c], 0.5) for c in range(3)])
    lo = np.array([nearest_rank(draws[:, c], 0.025) for c in range(3)])
    hi = np.array([nearest_rank(draws[:, c], 0.975) for c in range(3)])
    return PredictiveSummary(day=samples.day, median=med, lower95=lo, upper95=hi)


def _paired_observations(obs: ObservationSeries, fits) -> list[Observation]:
    by_day = {ob.day: ob for ob in obs.observations}
    out = []
    for fit in fits:
        if fit.day not in by_day:
            raise ValueError(f"no observation for fitted day {fit.day}")
        out.append(by_day[fit.day])
    return out


def pseudo_r2(obs: ObservationSeries, fits) -> float:
    """Pooled 1 - SSE/SST of predictive medians against the observations.

    The numerator sums squared median errors over every channel-day; the
    denominator sums squared deviations of each observation from its own
    channel's sample mean.  All three channels pool into one ratio.
    """
    fits = list(fits)
    if not fits:
        raise ValueError("no fitted days")
    paired = _paired_observations(obs, fits)
    y = np.array([ob.counts() for ob in paired], dtype=float)
    med = np.array([f.median for f in fits], dtype=float)
    sse = ((med - y) ** 2).sum()
    sst = ((y - y.mean(axis=0)) ** 2).sum()
    if sst == 0.0:
        raise UndefinedMetricError("observations are constant; pseudo-R^2 undefined")
    return 1.0 - sse / sst


def coverage(obs: ObservationSeries, fits) -> float:
    """Fraction of channel-day observations inside [lower95, upper95]."""
    fits = list(fits)
    if not fits:
        raise ValueError("no fitted days")
    paired = _paired_observations(obs, fits)
    y = np.array([ob.counts() for ob in paired], dtype=float)
    lo = np.array([f.lower95 for f in fits], dtype=float)
    hi = np.array([f.upper95 for f in fits], dtype=float)
    inside = ((y >= lo) & (y <= hi)).sum()
    return float(inside) / (3 * len(fits))


def _schedule_array(true_params, days: int) -> np.ndarray:
    if isinstance(true_params, ParamVector):
        return np.tile(true_params.as_array(), (days, 1))
    rows = [p.as_array() if isinstance(p, ParamVector) else np.asarray(p, dtype=float) for p in true_params]
    arr = np.array(rows, dtype=float)
    if arr.shape != (days, 4):
        raise ValueError(f"schedule must provide {days} rate vectors, got shape {arr.shape}")
    return arr


def simulate(
    true_params,
    init: StateVector,
    days: int,
    rng_seed,
    substeps: int = 10,
    start_date: date = date(2020, 1, 1),
) -> ObservationSeries:
    """Generate a synthetic observation series from known rates.

    ``true_params`` is a single ParamVector or a per-day sequence of length
    ``days``; entry k governs the transition from day k to day k+1.  The
    mean trajectory is integrated deterministically and each day's counts
    (day 0 included) are one Poisson draw at that day's (I, R, D) means.
    Recovered and deaths draws are then raised to their running maxima so
    the cumulative channels never decrease.
    """
    if days < 1:
        raise ValueError("days must be >= 1")
    schedule = _schedule_array(true_params, days)
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    state = init
    raw = [rng.poisson([init.i, init.r, init.d])]
    for k in range(days):
        state = integrate_day(state, ParamVector.from_array(schedule[k]), substeps)
        raw.append(rng.poisson([state.i, state.r, state.d]))
    counts = np.array(raw, dtype=np.int64)
    counts[:, 1] = np.maximum.accumulate(counts[:, 1])
    counts[:, 2] = np.maximum.accumulate(counts[:, 2])
    obs = tuple(
        Observation(k, int(counts[k, 0]), int(counts[k, 1]), int(counts[k, 2]))
        for k in range(days + 1)
    )
    return ObservationSeries(start_date=start_date, observations=obs)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return repr(float(x))


def _write_rows(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([cell if isinstance(cell, str) else _fmt(cell) for cell in row])


def write_fit_csv(path, obs: ObservationSeries, fits) -> None:
    """Observed counts next to their predictive bands, one row per day."""
    fits = list(fits)
    paired = _paired_observations(obs, fits)
    header = ["day", "date"]
    for ch in ("infected", "recovered", "deaths"):
        header += [f"{ch}_obs", f"{ch}_median", f"{ch}_lower", f"{ch}_upper"]
    rows = []
    for ob, fit in zip(paired, fits):
        row = [fit.day, obs.date_of(fit.day).isoformat()]
        for c, count in enumerate(ob.counts()):
            row += [count, fit.median[c], fit.lower95[c], fit.upper95[c]]
        rows.append(row)
    _write_rows(path, header, rows)


def write_params_csv(path, outputs, start_date: date) -> None:
    """Daily posterior median and central 95% interval for each rate."""
    header = ["day", "date"]
    for name in ("alpha", "beta", "gamma", "eta"):
        header += [f"{name}_median", f"{name}_lower", f"{name}_upper"]
    rows = []
    for out in outputs:
        row = [out.day, (start_date + timedelta(days=out.day)).isoformat()]
        for c in range(4):
            col = out.posterior_samples[:, c]
            row += [nearest_rank(col, 0.5), nearest_rank(col, 0.025), nearest_rank(col, 0.975)]
        rows.append(row)
    _write_rows(path, header, rows)


def write_monitor_csv(path, records, start_date: date) -> None:
    """Per-day chart statistic and signal flag."""
    header = ["day", "date", "t2", "signaled"]
    rows = [
        [r.day, (start_date + timedelta(days=r.day)).isoformat(), r.t2, r.signaled]
        for r in records
    ]
    _write_rows(path, header, rows)


def read_fit_csv(path) -> tuple[ObservationSeries, list[PredictiveSummary]]:
    """Rebuild the observed series and band list written by write_fit_csv."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        rows = list(reader)
    if len(header) != 14 or header[:2] != ["day", "date"]:
        raise ValueError(f"{path}: not a fit table")
    obs = []
    fits = []
    start = None
    for row in rows:
        day = int(row[0])
        d = date.fromisoformat(row[1])
        if start is None:
            start = d - timedelta(days=day)
        vals = [float(x) for x in row[2:]]
        obs.append(Observation(day, int(vals[0]), int(vals[4]), int(vals[8])))
        fits.append(
            PredictiveSummary(
                day=day,
                median=np.array(vals[1::4]),
                lower95=np.array(vals[2::4]),
                upper95=np.array(vals[3::4]),
            )
        )
    if not rows:
        raise ValueError(f"{path}: no data rows")
    return ObservationSeries(start_date=start, observations=tuple(obs)), fits


def read_table_csv(path) -> dict[str, list]:
    """Generic column-dict reader for the report tables (plotting input)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        cols = {name: [] for name in header}
        for row in reader:
            for name, cell in zip(header, row):
                cols[name].append(cell if name == "date" else float(cell))
    return cols


def write_summary(path, n_days: int, r2: float, cov: float, lam: float, limit: float, signal_days) -> None:
    """Key-value text block with the headline metrics and signal days."""
    lines = [
        f"days_fitted: {n_days}",
        f"pseudo_r2: {_fmt(r2)}",
        f"coverage: {_fmt(cov)}",
        f"lambda: {_fmt(lam)}",
        f"control_limit: {_fmt(limit)}",
        "signal_days: " + (", ".join(str(d) for d in signal_days) if signal_days else "none"),
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")
