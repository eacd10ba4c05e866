"""Closed-form heating power models fitted by ordinary least squares.

``LinearWeatherModel``::

    q_tot = C_in dT_in/dt + b (T_in - T_out) - c phi_rad + q0

``SupplyTempModel`` (supply-temperature control regime)::

    q_tot = k (T_sup - T_in) + q_dhw
"""

from __future__ import annotations

import datetime as dt
import warnings

import numpy as np
import pandas as pd
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import as_frame, check_vector
from .basis import storage_derivative
from .core import DailySeries
from .exceptions import DataValidationError, NotIdentifiableError

MIN_DAYS = 30
DEFAULT_T_IN = 21.0


def _span(index) -> tuple[dt.date, dt.date] | None:
    if isinstance(index, pd.DatetimeIndex) and len(index):
        return index.min().date(), index.max().date()
    return None


def _identifiable_columns(M: np.ndarray, order: list[int], rtol: float = 1e-9) -> list[int]:
    """Greedy column selection: keep a column only if it raises the rank."""
    kept: list[int] = []
    scale = np.linalg.norm(M, axis=0)
    for j in order:
        if scale[j] == 0:
            continue
        cand = kept + [j]
        sub = M[:, cand] / scale[cand]
        s = np.linalg.svd(sub, compute_uv=False)
        if s[-1] > rtol * s[0] * np.sqrt(M.shape[0]):
            kept.append(j)
    return kept


class LinearWeatherModel(RegressorMixin, BaseEstimator):
    """OLS weather model with physically signed coefficients.

    Parameters
    ----------
    t_base : float or "measured"
        Indoor temperature used in ``T_in - T_out``.
    include_storage : bool
        Add the ``C_in dT_in/dt`` term (needs measured ``t_in`` and a date index).

    Attributes
    ----------
    b_, c_, q0_, c_in_ : float
        Loss coefficient (kW/K), radiation coefficient (kW m2/W), combined
        constant (kW) and heat capacity (kW day/K). NaN when not identifiable.
    not_identifiable_ : list of str
    """

    def __init__(self, t_base=DEFAULT_T_IN, include_storage=False):
        self.t_base = t_base
        self.include_storage = include_storage

    def _columns(self, X):
        need_tin = self.t_base == "measured" or self.include_storage
        frame = as_frame(X, required=("t_out", "phi_rad") + (("t_in",) if need_tin else ()))
        t_ref = frame["t_in"].to_numpy() if self.t_base == "measured" else float(self.t_base)
        cols = {
            "b": t_ref - frame["t_out"].to_numpy(),
            "c": -frame["phi_rad"].to_numpy(),
            "q0": np.ones(len(frame)),
        }
        if self.include_storage:
            cols["c_in"] = storage_derivative(frame["t_in"].to_numpy(), frame.index)
        return frame, cols

    def fit(self, X, y):
        frame, cols = self._columns(X)
        y = check_vector(y, len(frame))
        if len(frame) < MIN_DAYS:
            raise DataValidationError(f"need at least {MIN_DAYS} complete days, got {len(frame)}")
        names = list(cols)
        M = np.column_stack([cols[n] for n in names])
        finite = np.all(np.isfinite(M), axis=1)
        M, y = M[finite], y[finite]
        # intercept first so a constant regressor is the one that gets dropped
        order = [names.index("q0")] + [i for i, n in enumerate(names) if n != "q0"]
        kept = _identifiable_columns(M, order)
        coef, *_ = np.linalg.lstsq(M[:, kept], y, rcond=None)
        params = {n: np.nan for n in names}
        for j, v in zip(kept, coef):
            params[names[j]] = float(v)
        self.b_ = params["b"]
        self.c_ = params["c"]
        self.q0_ = params["q0"]
        self.c_in_ = params.get("c_in", np.nan)
        self.not_identifiable_ = [names[j] for j in range(len(names)) if j not in kept]
        if np.isfinite(self.b_) and self.b_ <= 0:
            warnings.warn(f"fitted loss coefficient b={self.b_:.4g} is not positive", UserWarning)
        self.n_train_ = int(len(y))
        self.training_span_ = _span(frame.index[finite])
        self.residual_std_ = float(np.std(y - M[:, kept] @ coef))
        return self

    def predict(self, X):
        check_is_fitted(self, "b_")
        _, cols = self._columns(X)
        out = np.zeros(len(cols["q0"]))
        for name, attr in (("b", "b_"), ("c", "c_"), ("q0", "q0_"), ("c_in", "c_in_")):
            v = getattr(self, attr)
            if name in cols and np.isfinite(v):
                out = out + v * cols[name]
        return out

    def to_dict(self) -> dict:
        check_is_fitted(self, "b_")
        span = self.training_span_
        return {
            "kind": "linear_weather",
            "params": self.get_params(),
            "b": self.b_, "c": self.c_, "q0": self.q0_, "c_in": self.c_in_,
            "not_identifiable": list(self.not_identifiable_),
            "n_train": self.n_train_,
            "training_span": None if span is None else [d.isoformat() for d in span],
            "residual_std": self.residual_std_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "LinearWeatherModel":
        m = cls(**d["params"])
        m.b_, m.c_, m.q0_, m.c_in_ = (float(d[k]) if d[k] is not None else np.nan for k in ("b", "c", "q0", "c_in"))
        m.not_identifiable_ = list(d["not_identifiable"])
        m.n_train_ = d["n_train"]
        span = d.get("training_span")
        m.training_span_ = None if span is None else tuple(dt.date.fromisoformat(s) for s in span)
        m.residual_std_ = d.get("residual_std", np.nan)
        return m


class SupplyTempModel(RegressorMixin, BaseEstimator):
    """OLS of total power on ``T_sup - T_in``.

    Parameters
    ----------
    t_in : "auto" or float
        ``"auto"`` uses the per-day ``t_in`` column when it is fully present
        and falls back to a fixed 21 degC otherwise. The value used for
        prediction without a ``t_in`` column is stored in ``t_in_``.
    min_std : float
        Minimum standard deviation (K) of the regressor; below it the slope
        is not identifiable.
    """

    def __init__(self, t_in="auto", min_std=0.1):
        self.t_in = t_in
        self.min_std = min_std

    def _t_in(self, frame, fitted=False):
        if self.t_in != "auto":
            return np.full(len(frame), float(self.t_in))
        if "t_in" in frame.columns and np.all(np.isfinite(frame["t_in"].to_numpy())):
            return frame["t_in"].to_numpy()
        fallback = self.t_in_ if fitted else DEFAULT_T_IN
        return np.full(len(frame), fallback)

    def fit(self, X, y):
        frame = as_frame(X, required=("t_sup",), optional=("t_in",))
        y = check_vector(y, len(frame))
        if len(frame) < MIN_DAYS:
            raise DataValidationError(f"need at least {MIN_DAYS} complete days, got {len(frame)}")
        t_in = self._t_in(frame)
        x = frame["t_sup"].to_numpy() - t_in
        if np.std(x) < self.min_std:
            raise NotIdentifiableError("supply temperature barely varies; slope is not identifiable")
        M = np.column_stack([x, np.ones_like(x)])
        (k, q_dhw), *_ = np.linalg.lstsq(M, y, rcond=None)
        self.k_ = float(k)
        self.q_dhw_ = float(q_dhw)
        self.t_in_ = float(np.mean(t_in))
        self.per_day_t_in_ = self.t_in == "auto" and "t_in" in frame.columns and bool(np.all(np.isfinite(frame["t_in"])))
        if self.k_ <= 0:
            warnings.warn(f"fitted conductance k={self.k_:.4g} is not positive", UserWarning)
        if self.q_dhw_ < 0:
            warnings.warn(f"fitted q_dhw={self.q_dhw_:.4g} is negative", UserWarning)
        self.n_train_ = int(len(y))
        self.training_span_ = _span(frame.index)
        self.residual_std_ = float(np.std(y - M @ np.array([k, q_dhw])))
        return self

    @property
    def input_columns(self) -> tuple[str, ...]:
        """Columns ``predict`` reads; ``t_in`` only when fitted on measured values."""
        return ("t_sup", "t_in") if getattr(self, "per_day_t_in_", False) else ("t_sup",)

    def predict(self, X):
        check_is_fitted(self, "k_")
        frame = as_frame(X, required=("t_sup",), optional=("t_in",))
        return predict_supply_power(self, frame["t_sup"].to_numpy(), self._t_in(frame, fitted=True))

    def to_dict(self) -> dict:
        check_is_fitted(self, "k_")
        span = self.training_span_
        return {
            "kind": "supply_temp",
            "params": self.get_params(),
            "k": self.k_, "q_dhw": self.q_dhw_, "t_in": self.t_in_, "per_day_t_in": self.per_day_t_in_,
            "n_train": self.n_train_,
            "training_span": None if span is None else [d.isoformat() for d in span],
            "residual_std": self.residual_std_,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SupplyTempModel":
        m = cls(**d["params"])
        m.k_, m.q_dhw_, m.t_in_ = float(d["k"]), float(d["q_dhw"]), float(d["t_in"])
        m.per_day_t_in_ = bool(d.get("per_day_t_in", False))
        m.n_train_ = d["n_train"]
        span = d.get("training_span")
        m.training_span_ = None if span is None else tuple(dt.date.fromisoformat(s) for s in span)
        m.residual_std_ = d.get("residual_std", np.nan)
        return m


def predict_supply_power(model: SupplyTempModel, t_sup, t_in=None):
    """``k (t_sup - t_in) + q_dhw`` without any regime clamping."""
    t_in = model.t_in_ if t_in is None else t_in
    return model.k_ * (np.asarray(t_sup, dtype=float) - np.asarray(t_in, dtype=float)) + model.q_dhw_


def fit_linear_weather(series: DailySeries, t_base=DEFAULT_T_IN, include_storage=False) -> LinearWeatherModel:
    fields = ["q_tot", "t_out", "phi_rad"] + (["t_in"] if t_base == "measured" or include_storage else [])
    data = series.complete(fields)
    return LinearWeatherModel(t_base, include_storage).fit(data, data["q_tot"])


def fit_supply_temp(series: DailySeries, t_in="auto") -> SupplyTempModel:
    data = series.complete(["q_tot", "t_sup"])
    return SupplyTempModel(t_in).fit(data, data["q_tot"])
