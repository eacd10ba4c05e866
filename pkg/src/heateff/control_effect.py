"""Isolation of intelligent-control effects with a pair of calibrated models.

A reference model is calibrated on data before control activation with a
fixed base temperature, an intelligent-control model on data after it with the
measured indoor temperature::

    m_ref(T_out, phi)       = f1(T_base - T_out) - f2(T_out) phi + q0_ref
    m_ic(T_out, phi, T_in)  = g1(T_in - T_out)   - g2(T_out) phi + q0_ic

The control effect on a day is ``m_ic - m_ref`` evaluated on that day's
inputs; subtracting it from the measured power gives the consumption the
previous control would have produced. Sub-components are obtained by
re-evaluating the effect with one input replaced by a counterfactual.
"""

from __future__ import annotations

import datetime as dt
import warnings
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from ._validation import as_frame
from .basis import BasisSpec, build_design_matrix, make_hinge_basis, make_ramp_step_basis
from .core import CalibrationWindows, DailySeries, SeasonPolicy
from .exceptions import DataValidationError, WindowError
from .gam import ColdAnchor, GamPosterior, PriorSpec, calibrate

DEFAULT_T_BASE = 21.0
MIN_HEATING_DAYS = 120
EXTRAPOLATION_MARGIN = 3.0


@dataclass(frozen=True)
class Setback:
    """Scheduled indoor-temperature reduction of ``depth`` K over ``[start, end)``."""

    start: dt.datetime
    end: dt.datetime
    depth: float

    def __post_init__(self):
        if self.end <= self.start:
            raise DataValidationError("setback end must be after its start")
        if self.depth < 0:
            raise DataValidationError("setback depth must be non-negative")


def setback_daily_mean(schedule: Iterable[Setback], dates) -> np.ndarray:
    """Daily-mean temperature reduction (K) implied by ``schedule`` on ``dates``."""
    schedule = sorted(schedule, key=lambda s: s.start)
    for a, b in zip(schedule, schedule[1:]):
        if b.start < a.end:
            raise DataValidationError(f"overlapping setbacks starting {a.start} and {b.start}")
    days = pd.DatetimeIndex(dates).normalize()
    out = np.zeros(len(days))
    if not schedule:
        return out
    pos = {d: i for i, d in enumerate(days)}
    for s in schedule:
        day = pd.Timestamp(s.start).normalize()
        end = pd.Timestamp(s.end)
        while day < end:
            nxt = day + pd.Timedelta(days=1)
            overlap = (min(nxt, end) - max(day, pd.Timestamp(s.start))).total_seconds()
            if day in pos and overlap > 0:
                out[pos[day]] += s.depth * overlap / 86400.0
            day = nxt
    return out


def reconstruct_no_setback_tin(t_in: pd.Series, schedule: Iterable[Setback]) -> pd.Series:
    """Indoor temperature with scheduled setbacks added back (daily means)."""
    if not isinstance(t_in.index, pd.DatetimeIndex):
        raise DataValidationError("t_in must be indexed by date")
    raised = setback_daily_mean(schedule, t_in.index)
    return pd.Series(t_in.to_numpy(dtype=float) + raised, index=t_in.index, name="t_in_no_setbacks")


class ExtrapolationWarning(UserWarning):
    """Effect evaluated well below the outdoor temperatures seen in training."""


@dataclass(frozen=True)
class IsolationModelPair:
    """Reference and intelligent-control models calibrated on disjoint windows."""

    m_ref: GamPosterior
    m_ic: GamPosterior
    windows: CalibrationWindows

    def __post_init__(self):
        if self.m_ref.uses_measured_t_in:
            raise DataValidationError("reference model must use a fixed base temperature")
        if not self.m_ic.uses_measured_t_in:
            raise DataValidationError("intelligent-control model must use measured t_in")
        if self.m_ref.f2.knots != self.m_ic.f2.knots:
            raise DataValidationError("both models must share the f2 knot grid")

    def extrapolation_limit(self, margin: float = EXTRAPOLATION_MARGIN) -> float:
        """Outdoor temperature below which evaluations are flagged."""
        lows = [m.t_out_range[0] for m in (self.m_ref, self.m_ic) if m.t_out_range is not None]
        return (min(lows) if lows else -np.inf) - margin

    def to_dict(self) -> dict:
        return {"kind": "isolation_pair", "m_ref": self.m_ref.to_dict(), "m_ic": self.m_ic.to_dict(),
                "windows": self.windows.to_dict()}

    @classmethod
    def from_dict(cls, d: dict) -> "IsolationModelPair":
        return cls(GamPosterior.from_dict(d["m_ref"]), GamPosterior.from_dict(d["m_ic"]),
                   CalibrationWindows.from_dict(d["windows"]))


def _window(series: DailySeries, start, end, fields, label, min_days, policy) -> DailySeries:
    part = series.between(start, end)
    data = part.complete(fields)
    heating = int(policy.keep(data.dates, data["t_out"]).sum())
    if heating < min_days:
        raise WindowError(
            f"{label} window {start}..{end} has {heating} complete heating-season days, need {min_days}"
        )
    return data


def calibrate_pair(
    series: DailySeries,
    windows: CalibrationWindows,
    prior: PriorSpec | None = None,
    *,
    prior_ic: PriorSpec | None = None,
    f1: BasisSpec | None = None,
    f2: BasisSpec | None = None,
    t_base: float = DEFAULT_T_BASE,
    cold_anchor: bool = True,
    anchor_std: float | None = None,
    min_heating_days: int = MIN_HEATING_DAYS,
    season_policy: SeasonPolicy | None = None,
) -> IsolationModelPair:
    """Calibrate the reference model before activation and the control model after.

    Parameters
    ----------
    prior, prior_ic : PriorSpec, optional
        Priors for the reference and control models (``prior_ic`` defaults to
        ``prior``). A cold anchor already present in ``prior_ic`` is kept.
    cold_anchor : bool
        Tie the control model's f2 value at the coldest f2 knot to the
        reference model's estimate there.
    anchor_std : float, optional
        Prior std of that tie; default ``0.5 |target| + 1e-3``.
    min_heating_days : int
        Minimum complete heating-season days per window.
    """
    policy = season_policy or SeasonPolicy()
    prior = prior or PriorSpec()
    prior_ic = prior_ic or prior
    f1 = f1 or make_hinge_basis()
    f2 = f2 or make_ramp_step_basis()
    pre = _window(series, windows.pre_start, windows.pre_end, ["q_tot", "t_out", "phi_rad"], "pre",
                  min_heating_days, policy)
    post_all = series.between(windows.post_start, windows.post_end).complete(["q_tot", "t_out", "phi_rad"])
    if len(post_all) and not np.isfinite(post_all["t_in"]).any():
        raise DataValidationError("post window has no measured t_in")
    post = _window(series, windows.post_start, windows.post_end, ["q_tot", "t_out", "phi_rad", "t_in"], "post",
                   min_heating_days, policy)

    d_ref = build_design_matrix(pre, f1, f2, t_base)
    m_ref = calibrate(d_ref, pre["q_tot"], prior, t_out=pre["t_out"])
    if cold_anchor and prior_ic.cold_anchor is None:
        t_anchor = f2.knots[0]
        target = float(m_ref.f2_values([t_anchor])[0])
        std = anchor_std if anchor_std is not None else 0.5 * abs(target) + 1e-3
        prior_ic = prior_ic.replace(cold_anchor=ColdAnchor(t_anchor, target, std))
    d_ic = build_design_matrix(post, f1, f2, "measured")
    m_ic = calibrate(d_ic, post["q_tot"], prior_ic, t_out=post["t_out"])
    return IsolationModelPair(m_ref, m_ic, windows)


def _inputs(frame: pd.DataFrame) -> pd.DataFrame:
    return frame[["t_out", "phi_rad", "t_in"]].astype(float)


def _effect_frame(pair: IsolationModelPair, X: pd.DataFrame) -> np.ndarray:
    return pair.m_ic.predict(X) - pair.m_ref.predict(X[["t_out", "phi_rad"]])


def effect_ic(pair: IsolationModelPair, t_out, phi_rad, t_in, *, return_flags: bool = False):
    """Control effect in kW: ``m_ic(t_out, phi, t_in) - m_ref(t_out, phi)``.

    Days colder than the extrapolation limit are flagged (and a warning is
    issued) but still evaluated.
    """
    arrays = np.broadcast_arrays(*(np.atleast_1d(np.asarray(v, dtype=float)) for v in (t_out, phi_rad, t_in)))
    X = pd.DataFrame(dict(zip(("t_out", "phi_rad", "t_in"), arrays)))
    effect = _effect_frame(pair, X)
    flags = X["t_out"].to_numpy() < pair.extrapolation_limit()
    if flags.any():
        warnings.warn(f"{int(flags.sum())} day(s) below the extrapolation limit", ExtrapolationWarning)
    return (effect, flags) if return_flags else effect


def counterfactual_series(pair: IsolationModelPair, series: DailySeries) -> pd.DataFrame:
    """Daily effect and the consumption the previous control would have drawn.

    Only days with ``q_tot``, ``t_out``, ``phi_rad`` and ``t_in`` are returned.
    Columns: ``q_ic`` (observed), ``effect_ic``, ``q_old = q_ic - effect_ic``,
    the inputs used and ``extrapolated``.
    """
    data = series.complete(["q_tot", "t_out", "phi_rad", "t_in"]).frame
    X = _inputs(data)
    effect, flags = effect_ic(pair, X["t_out"], X["phi_rad"], X["t_in"], return_flags=True)
    q = data["q_tot"].to_numpy(dtype=float)
    out = pd.DataFrame({"q_ic": q, "effect_ic": effect, "q_old": q - effect}, index=data.index)
    for c in X.columns:
        out[c] = X[c].to_numpy()
    out["extrapolated"] = flags
    return out


@dataclass(frozen=True)
class Component:
    """A named counterfactual: ``transform`` maps the input frame
    (``t_out``, ``phi_rad``, ``t_in``) to its counterfactual version."""

    name: str
    transform: Callable[[pd.DataFrame], pd.DataFrame]


def _solar(X: pd.DataFrame) -> pd.DataFrame:
    return X.assign(phi_rad=0.0)


def _resolve(components, no_setback: pd.Series | None) -> list[Component]:
    out = []
    for c in components:
        if isinstance(c, Component):
            out.append(c)
        elif c == "solar":
            out.append(Component("solar", _solar))
        elif c == "setback":
            if no_setback is None:
                raise DataValidationError("setback component needs t_in without setbacks")
            out.append(Component("setback", lambda X: X.assign(t_in=no_setback.reindex(X.index).to_numpy())))
        else:
            raise DataValidationError(f"unknown component {c!r}")
    names = [c.name for c in out]
    if len(set(names)) != len(names) or "other" in names:
        raise DataValidationError("component names must be unique and not 'other'")
    return out


def decompose(
    pair: IsolationModelPair,
    series: DailySeries,
    components: Sequence = ("solar", "setback"),
    *,
    t_in_no_setbacks: pd.Series | None = None,
    setback_schedule: Iterable[Setback] | None = None,
) -> pd.DataFrame:
    """Split the daily control effect into one-at-a-time components.

    Each component is ``effect(actual) - effect(actual with that component's
    counterfactual)``; ``other`` closes the sum. Built-in components are
    ``"solar"`` (radiation set to zero) and ``"setback"`` (indoor temperature
    without setbacks, from ``t_in_no_setbacks``, ``setback_schedule`` or a
    ``t_in_no_setbacks`` column of ``series``). Any :class:`Component` may be
    added.
    """
    base = counterfactual_series(pair, series)
    X = _inputs(base)
    no_sb = t_in_no_setbacks
    if no_sb is None and setback_schedule is not None:
        no_sb = reconstruct_no_setback_tin(X["t_in"], setback_schedule)
    if no_sb is None and "t_in_no_setbacks" in series.frame.columns:
        no_sb = series.frame["t_in_no_setbacks"]
    total = base["effect_ic"].to_numpy()
    acc = np.zeros(len(base))
    for comp in _resolve(components, no_sb):
        Xc = comp.transform(X.copy())
        Xc = _inputs(Xc)
        if not np.all(np.isfinite(Xc.to_numpy())):
            raise DataValidationError(f"component {comp.name!r} produced non-finite inputs")
        value = total - _effect_frame(pair, Xc)
        base[comp.name] = value
        acc = acc + value
    base["other"] = total - acc
    return base


def season_label(ts: pd.Timestamp, start_month: int = 7) -> str:
    y = ts.year if ts.month >= start_month else ts.year - 1
    return f"{y}-{(y + 1) % 100:02d}"


def season_summary(effects: pd.DataFrame, *, start_month: int = 7,
                   season_policy: SeasonPolicy | None = None) -> dict:
    """Per-season totals of an effect frame.

    Energies are kWh (daily kW times 24). ``effect_pct`` is relative to
    ``q_old``; each component reports its own percentage of ``q_old`` and its
    share of the total effect. With ``season_policy`` only heating-season
    days (judged on the frame's ``t_out``) are summed.
    """
    if season_policy is not None:
        effects = effects[season_policy.keep(effects.index, effects["t_out"].to_numpy())]
    named = [c for c in effects.columns if c not in
             ("q_ic", "effect_ic", "q_old", "t_out", "phi_rad", "t_in", "extrapolated")]
    labels = [season_label(ts, start_month) for ts in effects.index]
    out = {}
    for label, grp in effects.groupby(labels, sort=True):
        q_old = float(grp["q_old"].sum())
        eff = float(grp["effect_ic"].sum())
        entry = {
            "start": grp.index.min().date().isoformat(),
            "end": grp.index.max().date().isoformat(),
            "n_days": int(len(grp)),
            "q_ic_kwh": 24.0 * float(grp["q_ic"].sum()),
            "q_old_kwh": 24.0 * q_old,
            "effect_kwh": 24.0 * eff,
            "effect_pct": 100.0 * eff / q_old if q_old else float("nan"),
            "n_extrapolated": int(grp["extrapolated"].sum()) if "extrapolated" in grp else 0,
            "components": {},
        }
        for c in named:
            v = float(grp[c].sum())
            entry["components"][c] = {
                "kwh": 24.0 * v,
                "pct_of_q_old": 100.0 * v / q_old if q_old else float("nan"),
                "share_of_effect_pct": 100.0 * v / eff if eff else float("nan"),
            }
        out[label] = entry
    return out


class ControlEffectIsolator(BaseEstimator):
    """Estimator wrapper around :func:`calibrate_pair` and :func:`decompose`.

    ``fit`` takes a :class:`DailySeries` spanning both windows; ``transform``
    returns the counterfactual frame and ``decompose`` the component split.

    Parameters
    ----------
    activation_date : date-like
    days_before, days_after : int
        Calibration window lengths around the activation date.
    t_base : float
        Fixed base temperature of the reference model.
    f1_knots, f2_knots : sequence of float
    cold_anchor : bool
    anchor_std : float, optional
    min_heating_days : int
    """

    def __init__(self, activation_date=None, days_before=365, days_after=365, t_base=DEFAULT_T_BASE,
                 f1_knots=None, f2_knots=None, cold_anchor=True, anchor_std=None,
                 min_heating_days=MIN_HEATING_DAYS):
        self.activation_date = activation_date
        self.days_before = days_before
        self.days_after = days_after
        self.t_base = t_base
        self.f1_knots = f1_knots
        self.f2_knots = f2_knots
        self.cold_anchor = cold_anchor
        self.anchor_std = anchor_std
        self.min_heating_days = min_heating_days

    def fit(self, X: DailySeries, y=None):
        if self.activation_date is None:
            raise DataValidationError("activation_date is required")
        if not isinstance(X, DailySeries):
            X = DailySeries(pd.DataFrame(X))
        windows = CalibrationWindows.around(self.activation_date, self.days_before, self.days_after)
        self.pair_ = calibrate_pair(
            X, windows,
            f1=make_hinge_basis(self.f1_knots) if self.f1_knots is not None else None,
            f2=make_ramp_step_basis(self.f2_knots) if self.f2_knots is not None else None,
            t_base=self.t_base, cold_anchor=self.cold_anchor, anchor_std=self.anchor_std,
            min_heating_days=self.min_heating_days,
        )
        return self

    def transform(self, X: DailySeries) -> pd.DataFrame:
        check_is_fitted(self, "pair_")
        return counterfactual_series(self.pair_, X)

    def decompose(self, X: DailySeries, components=("solar", "setback"), **kwargs) -> pd.DataFrame:
        check_is_fitted(self, "pair_")
        return decompose(self.pair_, X, components, **kwargs)
