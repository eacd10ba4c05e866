"""Before/after tracking against a calibrated baseline and supply-temperature effects.

Model-based tracking compares observed power with a baseline model's
prediction under the observed conditions::

    effect_pct = 100 (q_obs - q_baseline) / q_baseline

The supply-temperature estimators compare the observed supply temperature
with what the heating curve would have delivered. The total-power form is::

    effect = k (T_sup_obs - T_sup_hc) / (k (T_sup_hc - T_in) + q_dhw)

and the space-heating-only form drops ``k`` and ``q_dhw``::

    effect = (T_sup_obs - T_sup_hc) / (T_sup_hc - T_in)

Both assume the indoor temperature is the same under either control; a
change in ``T_in`` between control modes biases them.
"""

from __future__ import annotations

import warnings

import numpy as np
import pandas as pd

from .core import DailySeries, HeatingCurve
from .exceptions import DataValidationError

EPS_FLOOR = 0.1  # kW
MIN_SUPPLY_GAP = 0.5  # K


class TrackingWarning(UserWarning):
    """The baseline's training span overlaps the tracked span."""


def _model_inputs(model) -> tuple[str, ...]:
    declared = getattr(model, "input_columns", None)
    if declared is not None:
        return tuple(declared)
    if (
        getattr(model, "uses_measured_t_in", False)
        or getattr(model, "t_base", None) == "measured"
        or getattr(model, "include_storage", False)
    ):
        return ("t_out", "phi_rad", "t_in")
    return ("t_out", "phi_rad")


def predict_on_complete_days(model, frame: pd.DataFrame, inputs=None) -> tuple[np.ndarray, np.ndarray]:
    """Predict on rows with all model inputs present; NaN elsewhere.

    Returns ``(prediction, ok_mask)``.
    """
    inputs = tuple(inputs or _model_inputs(model))
    missing = [c for c in inputs if c not in frame.columns]
    if missing:
        raise DataValidationError(f"missing model inputs: {missing}")
    ok = np.all(np.isfinite(frame[list(inputs)].to_numpy(dtype=float)), axis=1)
    out = np.full(len(frame), np.nan)
    if ok.any():
        out[ok] = model.predict(frame.loc[ok, list(inputs)])
    return out, ok


def track_model_based(baseline, series: DailySeries, *, window: int = 30, eps_floor: float = EPS_FLOOR) -> pd.DataFrame:
    """Per-day relative deviation of observed power from a baseline model.

    Parameters
    ----------
    baseline : GamPosterior or estimator with ``predict``
        Calibrated before the tracked span. Overlap only raises a
        :class:`TrackingWarning` so the baseline can also be checked on its own
        training data.
    series : DailySeries
    window : int
        Length in days of the trailing energy-weighted rolling effect.
    eps_floor : float
        Baseline predictions at or below this (kW) are flagged.

    Returns
    -------
    DataFrame indexed by date with ``q_obs``, ``q_baseline``, ``effect_pct``,
    ``flagged``, ``rolling_effect_pct`` and ``window_id`` (consecutive
    ``window``-day blocks counted from the first day).
    """
    if window < 1:
        raise DataValidationError("window must be at least one day")
    span = getattr(baseline, "training_span", None) or getattr(baseline, "training_span_", None)
    if span is not None and len(series) and span[1] >= series.dates.min().date():
        warnings.warn(
            f"baseline trained until {span[1]} overlaps tracked span starting {series.dates.min().date()}",
            TrackingWarning,
        )
    frame = series.frame
    q_obs = frame["q_tot"].to_numpy(dtype=float)
    q_base, ok = predict_on_complete_days(baseline, frame)
    ok &= np.isfinite(q_obs)
    with np.errstate(invalid="ignore"):
        flagged = ~ok | ~(q_base > eps_floor)
    effect = np.full(len(frame), np.nan)
    good = ~flagged
    effect[good] = 100.0 * (q_obs[good] - q_base[good]) / q_base[good]

    obs_s = pd.Series(np.where(good, q_obs, 0.0), index=frame.index)
    base_s = pd.Series(np.where(good, q_base, 0.0), index=frame.index)
    roll_obs = obs_s.rolling(f"{window}D").sum()
    roll_base = base_s.rolling(f"{window}D").sum()
    with np.errstate(invalid="ignore", divide="ignore"):
        rolling = np.where(roll_base > eps_floor, 100.0 * (roll_obs - roll_base) / roll_base, np.nan)
    if len(frame):
        day = np.asarray((frame.index - frame.index.min()).days)
        window_id = day // window
    else:
        window_id = np.zeros(0, dtype=int)
    return pd.DataFrame(
        {
            "q_obs": q_obs,
            "q_baseline": q_base,
            "effect_pct": effect,
            "flagged": flagged,
            "rolling_effect_pct": rolling,
            "window_id": window_id,
        },
        index=frame.index,
    )


def energy_weighted_effect(points: pd.DataFrame, start=None, end=None) -> float:
    """``100 * sum(q_obs - q_baseline) / sum(q_baseline)`` over unflagged days."""
    f = points.loc[start:end]
    f = f[~f["flagged"]]
    base = f["q_baseline"].sum()
    if not base > 0:
        return float("nan")
    return float(100.0 * (f["q_obs"].sum() - base) / base)


def simulate_heating_curve(curve: HeatingCurve, t_out) -> np.ndarray:
    """Supply temperature the heating curve would have set for ``t_out``."""
    return np.asarray(curve(t_out), dtype=float)


def _finish(effect, flagged, return_flags):
    effect = np.where(flagged, np.nan, effect)
    if effect.ndim == 0:
        effect, flagged = float(effect), bool(flagged)
    return (effect, flagged) if return_flags else effect


def effect_supply_total(model, t_sup_obs, t_sup_hc, t_in, *, return_flags: bool = False):
    """Relative change of total power implied by a lower supply temperature.

    Parameters
    ----------
    model : SupplyTempModel
        Fitted ``k_`` and ``q_dhw_`` are used.
    t_sup_obs, t_sup_hc, t_in : array_like
        Observed supply temperature, heating-curve supply temperature and
        indoor temperature (degC).

    Returns
    -------
    ndarray or float
        NaN where the heating curve is not above ``t_in`` or the denominator
        is not positive; with ``return_flags`` also the boolean flag array.
    """
    k, q_dhw = float(model.k_), float(model.q_dhw_)
    t_sup_obs, t_sup_hc, t_in = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t_sup_obs, t_sup_hc, t_in)))
    denom = k * (t_sup_hc - t_in) + q_dhw
    with np.errstate(invalid="ignore", divide="ignore"):
        flagged = ~(t_sup_hc > t_in) | ~(denom > 0)
        effect = k * (t_sup_obs - t_sup_hc) / denom
    return _finish(effect, flagged, return_flags)


def effect_supply_space(t_sup_obs, t_sup_hc, t_in, *, min_gap: float = MIN_SUPPLY_GAP, return_flags: bool = False):
    """Relative change of space-heating power from supply temperatures alone.

    Flags (NaN) days where ``|t_sup_hc - t_in| < min_gap`` K.
    """
    t_sup_obs, t_sup_hc, t_in = np.broadcast_arrays(*(np.asarray(v, dtype=float) for v in (t_sup_obs, t_sup_hc, t_in)))
    gap = t_sup_hc - t_in
    with np.errstate(invalid="ignore", divide="ignore"):
        flagged = ~(np.abs(gap) >= min_gap)
        effect = (t_sup_obs - t_sup_hc) / gap
    return _finish(effect, flagged, return_flags)
