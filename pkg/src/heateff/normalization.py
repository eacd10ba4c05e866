"""Weather normalization of heating consumption.

Ratio methods rescale observed power with a power model evaluated under
reference and observed weather::

    total:  q_ref = f(ref) / f(obs) * q_obs
    space:  q_ref = g(ref) / g(obs) * (q_obs - q_dhw) + q_dhw

The degree-day method works per calendar month::

    E_ref = HDD_ref / HDD_obs * (E_obs - E_dhw) + E_dhw

All three are evaluated in the equivalent form
``x_obs + (r_ref - r_obs) / r_obs * (x_obs - dhw)``, which returns the input
bit-for-bit when reference and observed conditions coincide.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np
import pandas as pd

from .core import DailySeries, SeasonPolicy
from .effects import EPS_FLOOR, _model_inputs
from .exceptions import DataValidationError

MIN_COVERAGE = 0.9
SUMMER_MONTHS = (6, 7, 8)
NO_HEAT_DROP = 0.25  # K; smaller supply-return drops mean no space heat
DHW_POLICIES = ("summer_mean", "measured", "gross_area")


def _rescale(x_obs, r_obs, r_ref, dhw):
    return x_obs + (r_ref - r_obs) * (x_obs - dhw) / r_obs


@dataclass(frozen=True)
class ReferenceWeather:
    """Reference conditions: a daily weather frame or precomputed monthly HDDs.

    ``frame`` is indexed by date with ``t_out`` and ``phi_rad``. Observed dates
    not covered by it are matched by calendar day (29 February falls back to
    the 28th), so a single typical year can serve any span. ``hdd`` maps
    ``"YYYY-MM"`` or a month number 1..12 to K day.
    """

    frame: pd.DataFrame | None = None
    hdd: Mapping | None = None

    def __post_init__(self):
        if self.frame is None and self.hdd is None:
            raise DataValidationError("reference weather needs a daily frame or HDD values")
        if self.frame is not None:
            missing = [c for c in ("t_out", "phi_rad") if c not in self.frame.columns]
            if missing:
                raise DataValidationError(f"reference weather lacks {missing}")
            f = self.frame.copy()
            f.index = pd.DatetimeIndex(f.index).normalize()
            if f.index.has_duplicates:
                raise DataValidationError("reference weather has duplicate dates")
            object.__setattr__(self, "frame", f.sort_index())

    @classmethod
    def from_series(cls, series: DailySeries) -> "ReferenceWeather":
        return cls(frame=series.frame[["t_out", "phi_rad"]])

    def align(self, dates: pd.DatetimeIndex) -> pd.DataFrame:
        """Reference ``t_out`` and ``phi_rad`` for each of ``dates``."""
        if self.frame is None:
            raise DataValidationError("daily reference weather required")
        dates = pd.DatetimeIndex(dates)
        out = self.frame[["t_out", "phi_rad"]].reindex(dates)
        todo = out.isna().any(axis=1).to_numpy()
        if todo.any():
            ref = self.frame[["t_out", "phi_rad"]].dropna()
            by_day = ref.groupby([ref.index.month, ref.index.day]).mean()
            keys = [(d.month, 28 if (d.month, d.day) == (2, 29) else d.day) for d in dates[todo]]
            fill = by_day.reindex(pd.MultiIndex.from_tuples(keys))
            out.loc[dates[todo]] = fill.to_numpy()
        if out.isna().any().any():
            raise DataValidationError("reference weather does not cover every observed calendar day")
        return out


def _ratio_frame(model, series, ref, eps_floor):
    frame = series.frame
    inputs = _model_inputs(model)
    obs = frame[list(inputs)]
    ref_in = ref.align(frame.index)
    ref_x = obs.copy()
    ref_x["t_out"] = ref_in["t_out"].to_numpy()
    ref_x["phi_rad"] = ref_in["phi_rad"].to_numpy()
    q = frame["q_tot"].to_numpy(dtype=float)
    ok = np.all(np.isfinite(obs.to_numpy(dtype=float)), axis=1) & np.isfinite(q)
    f_obs = np.full(len(frame), np.nan)
    f_ref = np.full(len(frame), np.nan)
    if ok.any():
        f_obs[ok] = model.predict(obs[ok])
        f_ref[ok] = model.predict(ref_x[ok])
    with np.errstate(invalid="ignore"):
        flagged = ~ok | ~(f_obs > eps_floor) | ~np.isfinite(f_ref)
    return frame.index, q, f_obs, f_ref, flagged


def _ratio_result(index, q, f_obs, f_ref, flagged, dhw):
    q_ref = np.full(len(q), np.nan)
    good = ~flagged
    q_ref[good] = _rescale(q[good], f_obs[good], f_ref[good], dhw)
    return pd.DataFrame(
        {"q_obs": q, "f_obs": f_obs, "f_ref": f_ref, "q_ref": q_ref, "flagged": flagged},
        index=index,
    )


def normalize_ratio_total(model, series: DailySeries, ref: ReferenceWeather, *, eps_floor: float = EPS_FLOOR) -> pd.DataFrame:
    """Rescale total power by the model's reference-to-observed ratio.

    Days where the model predicts at most ``eps_floor`` kW, or inputs are
    missing, are flagged and left NaN in ``q_ref``.
    """
    return _ratio_result(*_ratio_frame(model, series, ref, eps_floor), 0.0)


def normalize_ratio_space(
    model_space, series: DailySeries, ref: ReferenceWeather, dhw_est: float, *, eps_floor: float = EPS_FLOOR
) -> pd.DataFrame:
    """Rescale only the space-heating part ``q_obs - dhw_est``.

    ``model_space`` predicts space-heating power; see :class:`SpaceHeatingModel`
    for deriving one from a total-power model.
    """
    if not dhw_est >= 0:
        raise DataValidationError("dhw_est must be non-negative")
    return _ratio_result(*_ratio_frame(model_space, series, ref, eps_floor), float(dhw_est))


def normalized_total(result: pd.DataFrame) -> dict:
    """Aggregate a ratio normalization; flagged days are counted, not hidden."""
    good = ~result["flagged"]
    return {
        "q_obs_sum": float(result.loc[good, "q_obs"].sum()),
        "q_ref_sum": float(result.loc[good, "q_ref"].sum()),
        "n_days": int(good.sum()),
        "n_flagged": int((~good).sum()),
    }


class SpaceHeatingModel:
    """Space-heating view of a total-power model: ``model(x) - dhw_est``."""

    def __init__(self, model, dhw_est: float):
        self.model = model
        self.dhw_est = float(dhw_est)

    @property
    def uses_measured_t_in(self) -> bool:
        return "t_in" in _model_inputs(self.model)

    def predict(self, X):
        return np.asarray(self.model.predict(X)) - self.dhw_est


def normalize_hdd(energy_obs, hdd_obs, hdd_ref, e_dhw_est):
    """Degree-day normalized energy; NaN where ``hdd_obs <= 0``."""
    e, h_obs, h_ref, dhw = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (energy_obs, hdd_obs, hdd_ref, e_dhw_est)))
    with np.errstate(invalid="ignore", divide="ignore"):
        ok = h_obs > 0
        out = np.where(ok, _rescale(e, h_obs, h_ref, dhw), np.nan)
    return float(out) if out.ndim == 0 else out


def compute_hdd(
    series: DailySeries,
    t_base: float = 17.0,
    season_policy: SeasonPolicy | None = None,
    *,
    min_coverage: float = MIN_COVERAGE,
) -> pd.DataFrame:
    """Monthly heating degree days over season-retained days.

    Returns a frame indexed by month start with ``hdd``, ``n_days`` (calendar),
    ``n_obs`` (days with ``t_out``), ``coverage``, ``n_retained`` and ``flag``
    (``""``, ``"low_coverage"`` or ``"no_heating_days"``).
    """
    policy = season_policy or SeasonPolicy()
    frame = series.frame
    if len(frame) == 0:
        return pd.DataFrame(columns=["hdd", "n_days", "n_obs", "coverage", "n_retained", "flag"])
    t_out = frame["t_out"].to_numpy(dtype=float)
    keep = policy.keep(frame.index, t_out)
    dd = np.where(keep, np.clip(t_base - np.nan_to_num(t_out), 0.0, None), 0.0)
    month = frame.index.to_period("M")
    g = pd.DataFrame({"dd": dd, "obs": np.isfinite(t_out), "keep": keep}, index=month).groupby(level=0)
    out = pd.DataFrame({"hdd": g["dd"].sum(), "n_obs": g["obs"].sum(), "n_retained": g["keep"].sum()})
    out["n_days"] = out.index.days_in_month
    out["coverage"] = out["n_obs"] / out["n_days"]
    out["flag"] = np.where(
        out["coverage"] < min_coverage, "low_coverage", np.where(out["n_retained"] == 0, "no_heating_days", "")
    )
    out.index = out.index.to_timestamp()
    out.index.name = "period"
    return out[["hdd", "n_days", "n_obs", "coverage", "n_retained", "flag"]]


def estimate_dhw_summer_mean(series: DailySeries, months=SUMMER_MONTHS, min_days: int = 30,
                             max_heat_drop: float | None = NO_HEAT_DROP) -> float:
    """Mean total power over summer days as a hot-water estimate (kW).

    Cool summer days can still draw space heat. When supply and return
    temperatures are present, days whose drop ``t_sup - t_ret`` reaches
    ``max_heat_drop`` K are left out; days without those readings are kept.
    ``max_heat_drop=None`` averages every summer day.
    """
    frame = series.frame
    q = frame["q_tot"].to_numpy(dtype=float)
    sel = np.isin(frame.index.month, list(months)) & np.isfinite(q)
    if max_heat_drop is not None:
        drop = frame["t_sup"].to_numpy(dtype=float) - frame["t_ret"].to_numpy(dtype=float)
        with np.errstate(invalid="ignore"):
            sel &= ~(drop >= max_heat_drop)
    if sel.sum() < min_days:
        raise DataValidationError(f"need {min_days} summer days for the hot-water estimate, got {int(sel.sum())}")
    return float(q[sel].mean())


@dataclass(frozen=True)
class HddNormalizationConfig:
    """Degree-day normalization settings.

    ``dhw_policy`` selects how hot water is estimated: ``summer_mean`` from
    summer-month consumption, ``measured`` from ``dhw_measured_kw`` and
    ``gross_area`` from ``dhw_kwh_per_m2_year`` times the floor area.
    """

    t_base: float = 17.0
    dhw_policy: str = "summer_mean"
    spring_cutoff: float = 10.0
    autumn_cutoff: float = 12.0
    summer_months: tuple[int, ...] = SUMMER_MONTHS
    dhw_measured_kw: float | None = None
    dhw_kwh_per_m2_year: float | None = None

    def __post_init__(self):
        if not 10.0 <= self.t_base <= 25.0:
            raise DataValidationError("t_base must be within [10, 25] degC")
        if not (self.spring_cutoff > 0 and self.autumn_cutoff > 0):
            raise DataValidationError("season cutoffs must be positive")
        if self.dhw_policy not in DHW_POLICIES:
            raise DataValidationError(f"dhw_policy must be one of {DHW_POLICIES}")
        if self.dhw_policy == "measured" and self.dhw_measured_kw is None:
            raise DataValidationError("measured policy needs dhw_measured_kw")
        if self.dhw_policy == "gross_area" and self.dhw_kwh_per_m2_year is None:
            raise DataValidationError("gross_area policy needs dhw_kwh_per_m2_year")

    @property
    def season_policy(self) -> SeasonPolicy:
        return SeasonPolicy(self.spring_cutoff, self.autumn_cutoff)

    def dhw_kw(self, series: DailySeries) -> float:
        if self.dhw_policy == "measured":
            return float(self.dhw_measured_kw)
        if self.dhw_policy == "gross_area":
            if not series.floor_area_m2:
                raise DataValidationError("gross_area policy needs the building floor area")
            return float(self.dhw_kwh_per_m2_year) * series.floor_area_m2 / 8760.0
        return estimate_dhw_summer_mean(series, self.summer_months)


def _reference_hdd(ref: ReferenceWeather, periods: pd.DatetimeIndex, config: HddNormalizationConfig) -> np.ndarray:
    if ref.hdd is not None:
        vals = []
        for p in periods:
            key = f"{p.year:04d}-{p.month:02d}"
            if key in ref.hdd:
                vals.append(float(ref.hdd[key]))
            elif p.month in ref.hdd or str(p.month) in ref.hdd:
                vals.append(float(ref.hdd.get(p.month, ref.hdd.get(str(p.month)))))
            else:
                raise DataValidationError(f"no reference HDD for {key}")
        return np.asarray(vals)
    ref_hdd = compute_hdd(DailySeries(ref.frame), config.t_base, config.season_policy)
    good = ref_hdd[ref_hdd["flag"] != "low_coverage"]
    by_month = good.groupby(good.index.month)["hdd"].mean()
    vals = []
    for p in periods:
        if p in good.index:
            vals.append(float(good.loc[p, "hdd"]))
        elif p.month in by_month.index:
            vals.append(float(by_month.loc[p.month]))
        else:
            raise DataValidationError(f"no reference weather for month {p.month}")
    return np.asarray(vals)


def normalize_hdd_monthly(series: DailySeries, ref: ReferenceWeather, config: HddNormalizationConfig | None = None) -> pd.DataFrame:
    """Calendar-month degree-day normalization of a daily series.

    Energies are kWh: daily mean kW times 24 over days with a power reading.
    Months with ``hdd_obs <= 0`` or low ``t_out`` coverage are flagged and
    their ``e_ref`` is NaN.
    """
    config = config or HddNormalizationConfig()
    dhw_kw = config.dhw_kw(series)
    hdd = compute_hdd(series, config.t_base, config.season_policy)
    frame = series.frame
    q = frame["q_tot"].to_numpy(dtype=float)
    month = frame.index.to_period("M").to_timestamp()
    g = pd.DataFrame({"e": np.nan_to_num(q) * 24.0, "n": np.isfinite(q)}, index=month).groupby(level=0).sum()
    out = hdd.copy()
    out["e_obs"] = g["e"].reindex(out.index).to_numpy()
    out["e_dhw"] = dhw_kw * 24.0 * g["n"].reindex(out.index).to_numpy()
    out["hdd_ref"] = _reference_hdd(ref, out.index, config)
    out = out.rename(columns={"hdd": "hdd_obs"})
    flag = out["flag"].to_numpy(dtype=object)
    flag = np.where((flag == "") & ~(out["hdd_obs"].to_numpy() > 0), "non_normalizable", flag)
    out["flag"] = flag
    e_ref = normalize_hdd(out["e_obs"], out["hdd_obs"], out["hdd_ref"], out["e_dhw"])
    out["e_ref"] = np.where(out["flag"] == "", e_ref, np.nan)
    return out[["e_obs", "e_dhw", "hdd_obs", "hdd_ref", "e_ref", "n_days", "coverage", "n_retained", "flag"]]
