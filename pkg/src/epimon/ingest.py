"""Ingest of Johns Hopkins-style cumulative case CSV files.

The upstream repository publishes one wide-format file per channel
(confirmed, recovered, deaths): four metadata columns (Province/State,
Country/Region, Lat, Long) followed by one column per date in m/d/yy form,
one row per province.  This module extracts a region from those files,
aligns the three channels on their common dates, and derives the observed
series the filter consumes: active infected = confirmed - recovered -
deaths, with recovered and deaths kept cumulative.

Cumulative channels occasionally step downward when the source restates a
count; such values are raised back to the running maximum (with a warning)
because the observation model treats them as cumulative Poisson means.

The canonical long-format output is a CSV with header
``day,date,infected,recovered,deaths`` and ISO dates, which round-trips
exactly.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from datetime import date, datetime, timedelta
from pathlib import Path

import numpy as np

from .likelihood import Observation

log = logging.getLogger(__name__)

_META_COLUMNS = ("Province/State", "Country/Region", "Lat", "Long")

# Upstream file names, used when a directory is given or when locating the
# sibling channels of a confirmed-channel file.
_CHANNEL_FILES = {
    "confirmed": "time_series_covid19_confirmed_global.csv",
    "recovered": "time_series_covid19_recovered_global.csv",
    "deaths": "time_series_covid19_deaths_global.csv",
}

CANONICAL_HEADER = ("day", "date", "infected", "recovered", "deaths")


class FormatError(ValueError):
    """Malformed input file; message carries the offending line number."""


class RegionNotFoundError(ValueError):
    """Requested region label matches no row of the file."""


class DataIntegrityError(ValueError):
    """Derived series violates a hard constraint; message lists the dates."""


@dataclass(frozen=True)
class RawSeries:
    """One region's aligned cumulative channels.

    dates are shared by all three channels; counts are cumulative totals.
    """

    region: str
    dates: tuple[date, ...]
    confirmed: np.ndarray
    recovered: np.ndarray
    deaths: np.ndarray

    def __post_init__(self):
        n = len(self.dates)
        for name in ("confirmed", "recovered", "deaths"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match dates")


@dataclass(frozen=True)
class ObservationSeries:
    """Contiguous day-indexed observations; day k falls on start_date + k days.

    start_date anchors day 0 even when the series itself begins later (fit
    summaries start at day 1, for instance).
    """

    start_date: date
    observations: tuple[Observation, ...]

    def __post_init__(self):
        if not self.observations:
            raise ValueError("series must hold at least one observation")
        first = self.observations[0].day
        for i, ob in enumerate(self.observations):
            if ob.day != first + i:
                raise ValueError(
                    f"days must be contiguous: observation {i} carries day {ob.day}"
                )

    def __len__(self) -> int:
        return len(self.observations)

    def date_of(self, day: int) -> date:
        return self.start_date + timedelta(days=day)

    def truncated(self, n_days: int) -> "ObservationSeries":
        """Drop observations after day n_days."""
        last = self.observations[-1].day
        if not self.observations[0].day <= n_days <= last:
            raise ValueError(f"series covers days {self.observations[0].day}..{last}")
        kept = tuple(ob for ob in self.observations if ob.day <= n_days)
        return ObservationSeries(self.start_date, kept)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(CANONICAL_HEADER)
            for ob in self.observations:
                writer.writerow(
                    [ob.day, self.date_of(ob.day).isoformat(), ob.infected, ob.recovered, ob.deaths]
                )

    @classmethod
    def from_csv(cls, path) -> "ObservationSeries":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise FormatError(f"{path}: empty file") from None
            if tuple(header) != CANONICAL_HEADER:
                raise FormatError(f"{path}, line 1: expected header {','.join(CANONICAL_HEADER)}")
            start = None
            obs = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != 5:
                    raise FormatError(f"{path}, line {lineno}: expected 5 fields, got {len(row)}")
                try:
                    day = int(row[0])
                    d = date.fromisoformat(row[1])
                    counts = [int(x) for x in row[2:]]
                except ValueError as exc:
                    raise FormatError(f"{path}, line {lineno}: {exc}") from None
                if obs and day != obs[-1].day + 1:
                    raise FormatError(
                        f"{path}, line {lineno}: expected day {obs[-1].day + 1}, got {day}"
                    )
                if start is None:
                    start = d - timedelta(days=day)
                elif d != start + timedelta(days=day):
                    raise FormatError(
                        f"{path}, line {lineno}: date {d} inconsistent with day index {day}"
                    )
                obs.append(Observation(day, *counts))
        if not obs:
            raise FormatError(f"{path}: no data rows")
        return cls(start_date=start, observations=tuple(obs))


def _parse_wide_table(path, region: str):
    """Extract one region's (dates, counts) from a single wide-format file.

    Rows whose trimmed Country/Region equals ``region`` are summed
    elementwise (a country split over provinces).
    """
    path = Path(path)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty file") from None
        if tuple(h.strip() for h in header[:4]) != _META_COLUMNS:
            raise FormatError(
                f"{path}, line 1: expected leading columns {', '.join(_META_COLUMNS)}"
            )
        try:
            dates = tuple(
                datetime.strptime(h.strip(), "%m/%d/%y").date() for h in header[4:]
            )
        except ValueError as exc:
            raise FormatError(f"{path}, line 1: {exc}") from None
        if not dates:
            raise FormatError(f"{path}, line 1: no date columns")
        total = np.zeros(len(dates), dtype=np.int64)
        matched = False
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise FormatError(
                    f"{path}, line {lineno}: expected {len(header)} fields, got {len(row)}"
                )
            if row[1].strip() != region:
                continue
            try:
                counts = [int(round(float(x))) for x in row[4:]]
            except ValueError as exc:
                raise FormatError(f"{path}, line {lineno}: {exc}") from None
            total += np.array(counts, dtype=np.int64)
            matched = True
    if not matched:
        raise RegionNotFoundError(f"{path}: no row with Country/Region = {region!r}")
    return dates, total


def _channel_paths(path) -> dict[str, Path]:
    """Resolve the three channel files from a directory or a confirmed file."""
    path = Path(path)
    if path.is_dir():
        out = {ch: path / name for ch, name in _CHANNEL_FILES.items()}
    else:
        name = path.name
        if "confirmed" not in name:
            raise FileNotFoundError(
                f"{path}: pass the confirmed-channel file (name containing 'confirmed') "
                "or a directory holding all three channel files"
            )
        out = {ch: path.with_name(name.replace("confirmed", ch)) for ch in _CHANNEL_FILES}
    for ch, p in out.items():
        if not p.is_file():
            raise FileNotFoundError(f"missing {ch} channel file: {p}")
    return out


def parse_jhu_csv(path, region: str) -> RawSeries:
    """Load one region's three cumulative channels.

    ``path`` is either a directory containing the three upstream files under
    their published names, or the confirmed-channel file itself (the
    recovered and deaths files are located beside it by name).  Channels are
    aligned on the dates present in all three files.
    """
    paths = _channel_paths(path)
    parsed = {ch: _parse_wide_table(p, region) for ch, p in paths.items()}
    common = set(parsed["confirmed"][0])
    for ch in ("recovered", "deaths"):
        common &= set(parsed[ch][0])
    if not common:
        raise DataIntegrityError(f"{region}: the three channels share no dates")
    aligned = {}
    for ch, (ch_dates, counts) in parsed.items():
        keep = [i for i, d in enumerate(ch_dates) if d in common]
        aligned[ch] = (tuple(ch_dates[i] for i in keep), counts[keep])
    dates = aligned["confirmed"][0]
    if any(aligned[ch][0] != dates for ch in ("recovered", "deaths")):
        raise DataIntegrityError(f"{region}: channel date columns disagree in order")
    dropped = sum(len(parsed[ch][0]) - len(dates) for ch in parsed)
    if dropped:
        log.warning("%s: dropped %d channel-dates absent from some channel", region, dropped)
    return RawSeries(
        region=region,
        dates=dates,
        confirmed=aligned["confirmed"][1],
        recovered=aligned["recovered"][1],
        deaths=aligned["deaths"][1],
    )


def _repair_monotone(values: np.ndarray, label: str) -> np.ndarray:
    """Raise downward restatements of a cumulative series to the running max."""
    repaired = np.maximum.accumulate(values)
    fixed = int((repaired != values).sum())
    if fixed:
        log.warning("%s: raised %d downward-restated values to the running maximum", label, fixed)
    return repaired


def derive_observations(raw: RawSeries, start_date: date) -> ObservationSeries:
    """Trim to start_date onward and derive the active-infected channel.

    infected(t) = confirmed(t) - recovered(t) - deaths(t), with the
    cumulative channels repaired to be non-decreasing first.

    Raises
    ------
    DataIntegrityError
        If any derived infected count is negative even after repair.
    """
    if start_date not in raw.dates:
        raise DataIntegrityError(
            f"start date {start_date.isoformat()} not in the data range "
            f"{raw.dates[0].isoformat()}..{raw.dates[-1].isoformat()}"
        )
    k0 = raw.dates.index(start_date)
    confirmed = _repair_monotone(raw.confirmed[k0:], f"{raw.region} confirmed")
    recovered = _repair_monotone(raw.recovered[k0:], f"{raw.region} recovered")
    deaths = _repair_monotone(raw.deaths[k0:], f"{raw.region} deaths")
    infected = confirmed - recovered - deaths
    if (infected < 0).any():
        bad = [raw.dates[k0 + i].isoformat() for i in np.flatnonzero(infected < 0)]
        raise DataIntegrityError(
            "derived active-infected count negative on: " + ", ".join(bad)
        )
    obs = tuple(
        Observation(i, int(infected[i]), int(recovered[i]), int(deaths[i]))
        for i in range(len(infected))
    )
    return ObservationSeries(start_date=start_date, observations=obs)
