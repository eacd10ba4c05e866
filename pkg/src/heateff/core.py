"""Domain types for daily building telemetry.

All temperatures are in degrees Celsius (differences therefore in K), power in
kW as a daily mean, solar radiation in W/m2 as a 24 h mean and humidity in %.
"""

from __future__ import annotations

import dataclasses
import datetime as dt
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Sequence

import numpy as np
import pandas as pd

from .exceptions import DataValidationError, WindowError

FIELDS: tuple[str, ...] = (
    "q_tot",
    "t_sup",
    "t_ret",
    "t_in",
    "rh_in",
    "t_out",
    "rh_out",
    "phi_rad",
)

#: Fields every modelling routine needs at minimum.
WEATHER_FIELDS = ("q_tot", "t_out", "phi_rad")


def _to_date(value) -> dt.date:
    if isinstance(value, dt.datetime):
        return value.date()
    if isinstance(value, dt.date):
        return value
    return pd.Timestamp(value).date()


@dataclass(frozen=True)
class BuildingRecord:
    """One daily-average telemetry sample. Missing values are NaN."""

    timestamp: dt.date
    q_tot: float = np.nan
    t_sup: float = np.nan
    t_ret: float = np.nan
    t_in: float = np.nan
    rh_in: float = np.nan
    t_out: float = np.nan
    rh_out: float = np.nan
    phi_rad: float = np.nan


class DailySeries:
    """Ordered collection of daily records plus building metadata.

    The underlying frame is indexed by a daily ``DatetimeIndex`` and always
    carries every column in :data:`FIELDS`. Rows are stored as ingested, so
    duplicates and gaps stay visible to :func:`validate_series`; use
    :meth:`regularize` to obtain a gap-explicit daily grid.
    """

    def __init__(
        self,
        frame: pd.DataFrame | None = None,
        *,
        building_id: str | None = None,
        location_id: str | None = None,
        floor_area_m2: float | None = None,
    ):
        if frame is None:
            frame = pd.DataFrame(columns=list(FIELDS), index=pd.DatetimeIndex([], name="date"))
        frame = frame.copy()
        if not isinstance(frame.index, pd.DatetimeIndex):
            frame.index = pd.DatetimeIndex(pd.to_datetime(frame.index))
        frame.index = frame.index.normalize()
        frame.index.name = "date"
        extra = [c for c in frame.columns if c not in FIELDS]
        frame = frame.reindex(columns=list(FIELDS) + extra).astype(float)
        self._frame = frame
        self.building_id = building_id
        self.location_id = location_id
        self.floor_area_m2 = floor_area_m2

    @classmethod
    def from_records(cls, records: Iterable[BuildingRecord], **meta) -> "DailySeries":
        rows = list(records)
        if not rows:
            return cls(**meta)
        frame = pd.DataFrame(
            {f: [getattr(r, f) for r in rows] for f in FIELDS},
            index=pd.DatetimeIndex([pd.Timestamp(r.timestamp) for r in rows], name="date"),
        )
        return cls(frame, **meta)

    @property
    def frame(self) -> pd.DataFrame:
        return self._frame.copy()

    @property
    def dates(self) -> pd.DatetimeIndex:
        return self._frame.index.copy()

    @property
    def meta(self) -> dict:
        return {
            "building_id": self.building_id,
            "location_id": self.location_id,
            "floor_area_m2": self.floor_area_m2,
        }

    def __len__(self) -> int:
        return len(self._frame)

    def __getitem__(self, column: str) -> np.ndarray:
        return self._frame[column].to_numpy(dtype=float, copy=True)

    def __repr__(self) -> str:
        if len(self) == 0:
            return "DailySeries(empty)"
        return (
            f"DailySeries({len(self)} rows, {self._frame.index[0].date()}"
            f"..{self._frame.index[-1].date()}, building_id={self.building_id!r})"
        )

    def records(self) -> Iterator[BuildingRecord]:
        for ts, row in self._frame[list(FIELDS)].iterrows():
            yield BuildingRecord(ts.date(), **{f: float(row[f]) for f in FIELDS})

    def _derive(self, frame: pd.DataFrame) -> "DailySeries":
        return DailySeries(frame, **self.meta)

    def regularize(self) -> "DailySeries":
        """Reindex onto the full daily grid; missing days become all-NaN rows."""
        if self._frame.index.has_duplicates:
            raise DataValidationError("series contains duplicate dates")
        if len(self) == 0:
            return self._derive(self._frame)
        frame = self._frame.sort_index()
        full = pd.date_range(frame.index[0], frame.index[-1], freq="D", name="date")
        return self._derive(frame.reindex(full))

    def complete_mask(self, fields: Sequence[str] = WEATHER_FIELDS) -> np.ndarray:
        return self._frame[list(fields)].notna().all(axis=1).to_numpy()

    def subset(self, mask) -> "DailySeries":
        return self._derive(self._frame.loc[np.asarray(mask, dtype=bool)])

    def complete(self, fields: Sequence[str] = WEATHER_FIELDS) -> "DailySeries":
        return self.subset(self.complete_mask(fields))

    def between(self, start, end) -> "DailySeries":
        """Rows with ``start <= date <= end`` (either bound may be None)."""
        idx = self._frame.index
        mask = np.ones(len(idx), dtype=bool)
        if start is not None:
            mask &= idx >= pd.Timestamp(start)
        if end is not None:
            mask &= idx <= pd.Timestamp(end)
        return self.subset(mask)

    def with_columns(self, **columns) -> "DailySeries":
        frame = self._frame.copy()
        for name, values in columns.items():
            frame[name] = np.asarray(values, dtype=float)
        return self._derive(frame)

    def equals(self, other: "DailySeries") -> bool:
        return self.meta == other.meta and self._frame.equals(other._frame)


@dataclass(frozen=True)
class ValidationReport:
    n_records: int
    completeness: float
    violations: dict[str, int]
    gaps: list[tuple[dt.date, dt.date]]
    flags: dict[str, int] = field(default_factory=dict)

    @property
    def n_violations(self) -> int:
        return int(sum(self.violations.values()))

    @property
    def ok(self) -> bool:
        return self.n_violations == 0

    def to_dict(self) -> dict:
        return {
            "n_records": self.n_records,
            "completeness": self.completeness,
            "violations": dict(self.violations),
            "flags": dict(self.flags),
            "gaps": [[a.isoformat(), b.isoformat()] for a, b in self.gaps],
        }


def validate_series(series: DailySeries, required: Sequence[str] = WEATHER_FIELDS) -> ValidationReport:
    """Report invariant violations, gaps and completeness without touching the data.

    ``t_sup < t_ret`` is reported under ``flags`` rather than ``violations``
    because it can legitimately occur around pump stops.
    """
    frame = series.frame
    n = len(frame)
    violations = {
        "duplicate_date": 0,
        "non_increasing_date": 0,
        "negative_q_tot": 0,
        "negative_phi_rad": 0,
        "rh_in_out_of_range": 0,
        "rh_out_out_of_range": 0,
    }
    if n == 0:
        return ValidationReport(0, 0.0, violations, [], {"t_sup_below_t_ret": 0})

    idx = frame.index
    violations["duplicate_date"] = int(idx.duplicated().sum())
    steps = np.diff(idx.asi8)
    violations["non_increasing_date"] = int((steps < 0).sum())
    violations["negative_q_tot"] = int((frame["q_tot"] < 0).sum())
    violations["negative_phi_rad"] = int((frame["phi_rad"] < 0).sum())
    for col in ("rh_in", "rh_out"):
        v = frame[col]
        violations[f"{col}_out_of_range"] = int(((v < 0) | (v > 100)).sum())
    flags = {"t_sup_below_t_ret": int((frame["t_sup"] < frame["t_ret"]).sum())}

    unique = idx.unique().sort_values()
    span = pd.date_range(unique[0], unique[-1], freq="D")
    present = set(idx[series.complete_mask(required)])
    completeness = len(present) / len(span)

    gaps = []
    missing = span.difference(unique)
    if len(missing):
        run_start = prev = missing[0]
        for day in missing[1:]:
            if day - prev != pd.Timedelta(days=1):
                gaps.append((run_start.date(), prev.date()))
                run_start = day
            prev = day
        gaps.append((run_start.date(), prev.date()))
    return ValidationReport(n, float(completeness), violations, gaps, flags)


@dataclass(frozen=True)
class SeasonPolicy:
    """Day-exclusion rule for warm days.

    Months ``1..spring_last_month`` use ``spring_cutoff``; the rest of the year
    uses ``autumn_cutoff``. A day is kept when its mean outdoor temperature is
    not above the applicable cutoff.
    """

    spring_cutoff: float = 10.0
    autumn_cutoff: float = 12.0
    spring_last_month: int = 6

    def cutoffs(self, dates: pd.DatetimeIndex) -> np.ndarray:
        months = np.asarray(dates.month)
        return np.where(months <= self.spring_last_month, self.spring_cutoff, self.autumn_cutoff)

    def keep(self, dates: pd.DatetimeIndex, t_out: np.ndarray) -> np.ndarray:
        t_out = np.asarray(t_out, dtype=float)
        with np.errstate(invalid="ignore"):
            return np.isfinite(t_out) & (t_out <= self.cutoffs(dates))


def mask_heating_season(series: DailySeries, policy: SeasonPolicy | None = None) -> DailySeries:
    policy = policy or SeasonPolicy()
    return series.subset(policy.keep(series.dates, series["t_out"]))


@dataclass(frozen=True)
class HeatingCurve:
    """Open-loop supply temperature rule, piecewise linear in outdoor temperature."""

    breakpoints: tuple[tuple[float, float], ...]

    def __post_init__(self):
        pts = tuple((float(a), float(b)) for a, b in self.breakpoints)
        object.__setattr__(self, "breakpoints", pts)
        if len(pts) < 1:
            raise DataValidationError("heating curve needs at least one breakpoint")
        t_out = np.array([p[0] for p in pts])
        t_sup = np.array([p[1] for p in pts])
        if np.any(np.diff(t_out) <= 0):
            raise DataValidationError("heating curve t_out breakpoints must be strictly increasing")
        if np.any(np.diff(t_sup) > 0):
            raise DataValidationError("heating curve t_sup must be non-increasing in t_out")

    def __call__(self, t_out):
        xs, ys = zip(*self.breakpoints)
        return np.interp(np.asarray(t_out, dtype=float), xs, ys)

    def to_dict(self) -> dict:
        return {"breakpoints": [list(p) for p in self.breakpoints]}

    @classmethod
    def from_dict(cls, d: dict) -> "HeatingCurve":
        return cls(tuple(tuple(p) for p in d["breakpoints"]))


@dataclass(frozen=True)
class CalibrationWindows:
    pre_start: dt.date
    pre_end: dt.date
    post_start: dt.date
    post_end: dt.date
    activation_date: dt.date

    def __post_init__(self):
        for f in dataclasses.fields(self):
            object.__setattr__(self, f.name, _to_date(getattr(self, f.name)))
        if not (self.pre_start <= self.pre_end <= self.activation_date <= self.post_start <= self.post_end):
            raise WindowError(
                "windows must satisfy pre_start <= pre_end <= activation_date <= post_start <= post_end"
            )
        if self.pre_end >= self.post_start:
            raise WindowError("pre and post windows overlap")

    @classmethod
    def around(cls, activation_date, days_before: int = 365, days_after: int = 365) -> "CalibrationWindows":
        """Windows of the given length immediately before and after activation."""
        act = _to_date(activation_date)
        return cls(
            pre_start=act - dt.timedelta(days=days_before),
            pre_end=act - dt.timedelta(days=1),
            post_start=act,
            post_end=act + dt.timedelta(days=days_after - 1),
            activation_date=act,
        )

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name).isoformat() for f in dataclasses.fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> "CalibrationWindows":
        return cls(**{k: d[k] for k in ("pre_start", "pre_end", "post_start", "post_end", "activation_date")})


def aggregate_hourly(frame: pd.DataFrame, min_coverage: float = 0.75) -> pd.DataFrame:
    """Daily means of an hourly frame; a day/field needs ``min_coverage`` of 24 hours."""
    frame = frame.copy()
    frame.index = pd.DatetimeIndex(frame.index)
    days = frame.index.normalize()
    grouped = frame.groupby(days)
    means = grouped.mean()
    counts = grouped.count()
    means = means.where(counts >= np.ceil(min_coverage * 24))
    means.index.name = "date"
    return means
