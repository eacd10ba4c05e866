"""Diagnostics for non-control changes in building behaviour.

Four panels are quantified:

a. total power against supply temperature (level and slope of the relation);
b. return against supply temperature (circulation of the heating network);
c. additional indoor humidity over replacement air (ventilation);
d. weather-normalized performance against a baseline model.

Change detection compares adjacent windows of valid days on either side of
every candidate split, within one control regime at a time. A candidate is
flagged when the shift exceeds an absolute threshold and its z-score exceeds
``z_threshold``. The split with the largest shift in a run of flagged splits
is the change date; when the valid days around it are separated by a data
gap (e.g. summer for heating-only panels) the change is only localized to that
interval. Flags from all panels whose intervals lie within ``merge_days`` of
each other form one change, labelled by rule:

* humidity shift -> 2 (ventilation)
* slope shift in panel a or b -> 3 (heating system)
* level shift in panel a -> 5 (hot water / occupancy)
* performance shift next to an external renovation flag -> 4 (renovation)
* anything else -> unclassified

A positive trend of monthly performance without step changes is labelled
1 (aging). All thresholds are configurable through :class:`DiagnosticConfig`.
"""

from __future__ import annotations

import datetime as dt
from dataclasses import asdict, dataclass, field

import numpy as np
import pandas as pd

from .core import DailySeries, SeasonPolicy, _to_date
from .effects import EPS_FLOOR, predict_on_complete_days, track_model_based
from .exceptions import DataValidationError
from .power_models import DEFAULT_T_IN
from .psychrometrics import replacement_air_rh, saturation_vapor_pressure

__all__ = [
    "WindowedFit",
    "DiagnosticConfig",
    "DetectedChange",
    "ChangeReport",
    "replacement_air_rh",
    "saturation_vapor_pressure",
    "rolling_supply_power_fit",
    "rolling_return_supply_fit",
    "humidity_panel",
    "performance_panel",
    "scan_mean_shift",
    "scan_regression_shift",
    "classify_changes",
    "diagnose",
]

RH_REFERENCE_T = 21.0

CATEGORY_LABELS = {
    1: "aging",
    2: "ventilation",
    3: "heating_system",
    4: "renovation",
    5: "dhw_or_occupancy",
    None: "unclassified",
}


@dataclass(frozen=True)
class WindowedFit:
    start: dt.date
    end: dt.date
    slope: float
    intercept: float
    r2: float
    n: int


def _rolling_fit(series: DailySeries, x_col: str, y_col: str, window_days: int, step_days: int,
                 min_n: int, min_x_std: float, min_heat_drop: float | None) -> pd.DataFrame:
    cols = ["start", "end", "slope", "intercept", "r2", "n"]
    if x_col == "drive":
        # supply-minus-indoor temperature; 21 degC where t_in is not measured
        t_in = series["t_in"]
        series = series.with_columns(drive=series["t_sup"] - np.where(np.isfinite(t_in), t_in, DEFAULT_T_IN))
    data = series.complete([x_col, y_col])
    if min_heat_drop is not None:
        data = data.complete(["t_sup", "t_ret"])
        data = data.subset((data["t_sup"] - data["t_ret"]) >= min_heat_drop)
    if len(data) == 0:
        return pd.DataFrame(columns=cols)
    dates = data.dates
    x, y = data[x_col], data[y_col]
    rows = []
    t0 = dates.min()
    last = dates.max()
    while t0 + pd.Timedelta(days=window_days - 1) <= last:
        t1 = t0 + pd.Timedelta(days=window_days - 1)
        sel = (dates >= t0) & (dates <= t1)
        n = int(sel.sum())
        if n >= min_n and np.std(x[sel]) >= min_x_std:
            slope, intercept = np.polyfit(x[sel], y[sel], 1)
            resid = y[sel] - (slope * x[sel] + intercept)
            sst = np.sum((y[sel] - y[sel].mean()) ** 2)
            r2 = 1.0 - np.sum(resid**2) / sst if sst > 0 else float("nan")
            rows.append(asdict(WindowedFit(t0.date(), t1.date(), float(slope), float(intercept), float(r2), n)))
        t0 = t0 + pd.Timedelta(days=step_days)
    return pd.DataFrame(rows, columns=cols)


def rolling_supply_power_fit(series: DailySeries, window_days: int = 90, step_days: int = 30, *,
                             min_n: int = 20, min_t_sup_std: float = 2.0,
                             min_heat_drop: float | None = 1.0) -> pd.DataFrame:
    """Windowed OLS of ``q_tot`` on ``t_sup - t_in``.

    The intercept is then the hot-water load and the slope the radiator
    conductance. Measured ``t_in`` is used where present, 21 degC elsewhere.
    Only heating days (``t_sup - t_ret >= min_heat_drop`` K) enter; pass
    ``None`` to use every day. Windows with fewer than ``min_n`` days or a
    supply-temperature spread below ``min_t_sup_std`` K are skipped. An
    intercept jump points at hot water or occupancy, a slope change at the
    heating system.
    """
    return _rolling_fit(series, "drive", "q_tot", window_days, step_days, min_n, min_t_sup_std, min_heat_drop)


def rolling_return_supply_fit(series: DailySeries, window_days: int = 90, step_days: int = 30, *,
                              min_n: int = 20, min_t_sup_std: float = 2.0,
                              min_heat_drop: float | None = 1.0) -> pd.DataFrame:
    """Windowed OLS of ``t_ret`` on ``t_sup`` (circulation changes move the slope)."""
    return _rolling_fit(series, "t_sup", "t_ret", window_days, step_days, min_n, min_t_sup_std, min_heat_drop)


def humidity_panel(series: DailySeries) -> pd.DataFrame:
    """Daily replacement-air RH and the additional RH measured indoors.

    Days lacking any of ``rh_in``, ``rh_out``, ``t_in``, ``t_out`` are left
    out; the result is empty when no day has all four. ``rh_additional_ref``
    rescales the additional RH to a 21 degC room so that indoor-temperature
    swings (e.g. free-floating summer days) do not masquerade as ventilation
    changes; change detection uses this column.
    """
    data = series.complete(["rh_in", "rh_out", "t_in", "t_out"])
    if len(data) == 0:
        return pd.DataFrame(columns=["rh_replacement", "rh_additional", "rh_additional_ref"],
                            index=pd.DatetimeIndex([], name="date"))
    rep = replacement_air_rh(data["t_out"], data["rh_out"], data["t_in"])
    add = data["rh_in"] - rep
    # same moisture excess expressed at a fixed indoor temperature
    add_ref = add * saturation_vapor_pressure(data["t_in"]) / saturation_vapor_pressure(RH_REFERENCE_T)
    return pd.DataFrame({"rh_replacement": rep, "rh_additional": add, "rh_additional_ref": add_ref},
                        index=data.dates)


def performance_panel(baseline, series: DailySeries, **kwargs) -> pd.DataFrame:
    """Tracking against a baseline chosen by the caller (see :func:`track_model_based`)."""
    return track_model_based(baseline, series, **kwargs)


# ----------------------------------------------------------------- scanning


@dataclass(frozen=True)
class DiagnosticConfig:
    window: int = 60  # valid days on each side of a split
    min_n: int = 20
    z_threshold: float = 5.0
    level_threshold: float = 1.0  # kW
    slope_threshold: float = 0.15  # relative
    humidity_threshold: float = 3.0  # percentage points
    performance_threshold: float = 4.0  # percentage points
    min_t_sup_std: float = 2.0  # K
    min_heat_drop: float = 1.0  # K, t_sup - t_ret on heating days
    merge_days: int = 30
    aging_slope: float = 0.5  # pp per year
    aging_t: float = 3.0
    aging_min_months: int = 24


def _windows_cumsum(a: np.ndarray, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Sums of ``a`` over ``[i-w, i)`` and ``[i, i+w)`` for ``i = w..n-w``."""
    c = np.concatenate([np.zeros((1,) + a.shape[1:]), np.cumsum(a, axis=0)])
    i = np.arange(w, a.shape[0] - w + 1)
    return c[i] - c[i - w], c[i + w] - c[i]


def _scan_frame(dates, idx, stat, z):
    dates = pd.DatetimeIndex(dates)
    return pd.DataFrame(
        {"date_lo": dates[idx - 1], "date_hi": dates[idx], "shift": stat, "z": z},
        index=pd.RangeIndex(len(idx)),
    )


def scan_mean_shift(dates, values, window: int = 60, weights=None) -> pd.DataFrame:
    """Adjacent-window mean shift at every split of the valid-day sequence.

    With ``weights`` the window statistic is the ratio ``sum(values) /
    sum(weights)``, i.e. an energy-weighted mean of ``values / weights``.

    Returns a frame with ``date_lo`` (last day before the split), ``date_hi``
    (first day after), ``shift`` (right minus left) and ``z``.
    """
    v = np.asarray(values, dtype=float)
    n = len(v)
    if n < 2 * window:
        return _scan_frame(pd.DatetimeIndex([]), np.zeros(0, dtype=int), np.zeros(0), np.zeros(0))
    wts = np.ones(n) if weights is None else np.asarray(weights, dtype=float)
    sums = {}
    for key, arr in (("v", v), ("w", wts), ("vv", v * v), ("vw", v * wts), ("ww", wts * wts)):
        sums[key] = _windows_cumsum(arr, window)
    ml, mr = (sums["v"][j] / sums["w"][j] for j in (0, 1))

    def var(j, m):
        # linearized variance of a ratio of sums
        ss = sums["vv"][j] - 2 * m * sums["vw"][j] + m * m * sums["ww"][j]
        return np.maximum(ss, 0.0) / sums["w"][j] ** 2 * window / (window - 1)

    se = np.sqrt(var(0, ml) + var(1, mr))
    shift = mr - ml
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(se > 0, shift / se, np.inf * np.sign(shift))
    return _scan_frame(dates, np.arange(window, n - window + 1), shift, z)


def scan_regression_shift(dates, X, y, window: int = 60, *, coef: int = 1, min_x_std: float = 0.0) -> pd.DataFrame:
    """Adjacent-window OLS comparison at every split.

    ``X`` must include a constant column. Returns ``slope_shift`` (relative
    change of coefficient ``coef``), ``slope_z``, ``level_shift`` (offset of
    the right window in a pooled fit with common coefficients), ``level_z`` and
    ``gain``, the drop in residual sum of squares from fitting the windows
    separately rather than pooled (largest at the true split of a step), and
    ``level_gain``, the drop from adding only the step dummy.
    Splits where a window's spread of ``X[:, coef]`` is below ``min_x_std`` are
    dropped.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    empty = pd.DataFrame(columns=["date_lo", "date_hi", "slope_shift", "slope_z", "level_shift", "level_z", "gain", "level_gain"])
    if n < 2 * window or window <= p:
        return empty
    xx_l, xx_r = _windows_cumsum(X[:, :, None] * X[:, None, :], window)
    xy_l, xy_r = _windows_cumsum(X * y[:, None], window)
    yy_l, yy_r = _windows_cumsum(y * y, window)
    s1_l, s1_r = _windows_cumsum(X[:, coef], window)
    s2_l, s2_r = _windows_cumsum(X[:, coef] ** 2, window)
    std_l = np.sqrt(np.maximum(s2_l / window - (s1_l / window) ** 2, 0.0))
    std_r = np.sqrt(np.maximum(s2_r / window - (s1_r / window) ** 2, 0.0))
    ok = (std_l >= min_x_std) & (std_r >= min_x_std)
    ok &= (np.linalg.cond(xx_l) < 1e12) & (np.linalg.cond(xx_r) < 1e12)
    idx = np.arange(window, n - window + 1)[ok]
    if len(idx) == 0:
        return empty
    xx_l, xx_r, xy_l, xy_r = xx_l[ok], xx_r[ok], xy_l[ok], xy_r[ok]
    inv_l, inv_r = np.linalg.inv(xx_l), np.linalg.inv(xx_r)
    b_l = np.einsum("nij,nj->ni", inv_l, xy_l)
    b_r = np.einsum("nij,nj->ni", inv_r, xy_r)
    dof = window - p
    rss_l = np.maximum(yy_l[ok] - np.einsum("ni,ni->n", b_l, xy_l), 0.0)
    rss_r = np.maximum(yy_r[ok] - np.einsum("ni,ni->n", b_r, xy_r), 0.0)
    xy_p, yy_p = xy_l + xy_r, yy_l[ok] + yy_r[ok]
    b_p = np.linalg.solve(xx_l + xx_r, xy_p[:, :, None])[:, :, 0]
    rss_p = np.maximum(yy_p - np.einsum("ni,ni->n", b_p, xy_p), 0.0)
    s2l, s2r = rss_l / dof, rss_r / dof
    cov_l, cov_r = s2l[:, None, None] * inv_l, s2r[:, None, None] * inv_r
    # level: pooled fit with a step dummy on the right window (common slopes);
    # the first row of X'X holds the column sums because column 0 is constant
    m = len(idx)
    sx_r = xx_r[:, 0, :]
    sy_r = xy_r[:, 0]
    A = np.zeros((m, p + 1, p + 1))
    A[:, :p, :p] = xx_l + xx_r
    A[:, :p, p] = A[:, p, :p] = sx_r
    A[:, p, p] = window
    rhs = np.concatenate([xy_p, sy_r[:, None]], axis=1)
    inv_a = np.linalg.inv(A)
    b_d = np.einsum("nij,nj->ni", inv_a, rhs)
    rss_d = np.maximum(yy_p - np.einsum("ni,ni->n", b_d, rhs), 0.0)
    level = b_d[:, p]
    level_var = rss_d / (2 * window - p - 1) * inv_a[:, p, p]
    ref = 0.5 * (np.abs(b_l[:, coef]) + np.abs(b_r[:, coef]))
    d_slope = b_r[:, coef] - b_l[:, coef]
    slope_var = cov_l[:, coef, coef] + cov_r[:, coef, coef]
    with np.errstate(divide="ignore", invalid="ignore"):
        slope_rel = np.where(ref > 0, d_slope / ref, 0.0)
        slope_z = np.where(slope_var > 0, d_slope / np.sqrt(slope_var), np.inf * np.sign(d_slope))
        level_z = np.where(level_var > 0, level / np.sqrt(level_var), np.inf * np.sign(level))
    dates = pd.DatetimeIndex(dates)
    return pd.DataFrame(
        {
            "date_lo": dates[idx - 1],
            "date_hi": dates[idx],
            "slope_shift": slope_rel,
            "slope_z": slope_z,
            "level_shift": level,
            "level_z": level_z,
            "gain": np.maximum(rss_p - rss_l - rss_r, 0.0),
            "level_gain": np.maximum(rss_p - rss_d, 0.0),
        }
    )


@dataclass(frozen=True)
class _Flag:
    panel: str
    kind: str
    date: pd.Timestamp  # point estimate of the change
    lo: pd.Timestamp  # localization interval used for merging
    hi: pd.Timestamp
    shift: float
    z: float


def _flags(scan: pd.DataFrame, hit: np.ndarray, shift_col: str, z_col: str, score_col: str,
           panel: str, kind: str, merge_days: int, spread: int = 15) -> list[_Flag]:
    """One flag per run of hits; the run's split with the largest score wins.

    The flag's interval reaches ``spread`` valid days to either side of the
    split, so sparse data (e.g. few heating days in summer) widens it.
    """
    cand = scan[np.asarray(hit, dtype=bool)]
    out: list[_Flag] = []
    run: list[int] = []
    prev = None
    for pos, row in cand.iterrows():
        if prev is not None and (row["date_lo"] - prev).days > merge_days:
            out.append(_best(scan, cand.loc[run], shift_col, z_col, score_col, panel, kind, spread))
            run = []
        run.append(pos)
        prev = row["date_hi"]
    if run:
        out.append(_best(scan, cand.loc[run], shift_col, z_col, score_col, panel, kind, spread))
    return out


def _hits(scan: pd.DataFrame, shift_col: str, z_col: str, threshold: float, z_thr: float) -> np.ndarray:
    if scan.empty:
        return np.zeros(0, dtype=bool)
    return ((scan[shift_col].abs() >= threshold) & (scan[z_col].abs() >= z_thr)).to_numpy()


def _best(scan, rows: pd.DataFrame, shift_col, z_col, score_col, panel, kind, spread) -> _Flag:
    pos = rows[score_col].abs().idxmax()
    r = rows.loc[pos]
    lo, hi = r["date_lo"], r["date_hi"]
    date = hi if (hi - lo).days <= 1 else lo + (hi - lo) / 2
    # scan rows are consecutive splits of the valid-day sequence
    i = scan.index.get_loc(pos)
    first = scan["date_hi"].iloc[max(i - spread, 0)]
    last = scan["date_lo"].iloc[min(i + spread, len(scan) - 1)]
    return _Flag(panel, kind, pd.Timestamp(date).normalize(), min(first, lo), max(last, hi),
                 float(r[shift_col]), float(r[z_col]))


# ----------------------------------------------------------------- report


@dataclass
class DetectedChange:
    date: dt.date
    interval: tuple[dt.date, dt.date]
    category: int | None
    label: str
    evidence: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "date": self.date.isoformat(),
            "interval": [d.isoformat() for d in self.interval],
            "category": self.category,
            "label": self.label,
            "evidence": self.evidence,
        }


@dataclass
class ChangeReport:
    changes: list[DetectedChange] = field(default_factory=list)
    aging: dict | None = None

    @property
    def empty(self) -> bool:
        return not self.changes and self.aging is None

    def categories(self) -> list:
        cats = [c.category for c in self.changes]
        return cats + ([1] if self.aging is not None else [])

    def to_dict(self) -> dict:
        return {"changes": [c.to_dict() for c in self.changes], "aging": self.aging}


def _segments(dates: pd.DatetimeIndex, activation) -> list[np.ndarray]:
    if activation is None:
        return [np.ones(len(dates), bool)]
    act = pd.Timestamp(_to_date(activation))
    return [np.asarray(dates < act), np.asarray(dates >= act)]


def _panel_ab_flags(series: DailySeries, activation, cfg: DiagnosticConfig) -> tuple[list[_Flag], dict]:
    data = series.complete(["q_tot", "t_sup", "t_ret", "phi_rad"])
    heating = (data["t_sup"] - data["t_ret"]) >= cfg.min_heat_drop
    data = data.subset(heating)
    flags: list[_Flag] = []
    scans = {"a": [], "b": []}
    for seg in _segments(data.dates, activation):
        part = data.subset(seg)
        if len(part) < 2 * cfg.window:
            continue
        X = np.column_stack([np.ones(len(part)), part["t_sup"], part["phi_rad"]])
        for panel, target in (("a", "q_tot"), ("b", "t_ret")):
            scan = scan_regression_shift(part.dates, X, part[target], cfg.window, min_x_std=cfg.min_t_sup_std)
            scans[panel].append(scan)
            hit = _hits(scan, "slope_shift", "slope_z", cfg.slope_threshold, cfg.z_threshold)
            flags += _flags(scan, hit, "slope_shift", "slope_z", "gain", panel, "slope", cfg.merge_days, cfg.window // 4)
            if panel == "a":
                hit = _hits(scan, "level_shift", "level_z", cfg.level_threshold, cfg.z_threshold)
                flags += _flags(scan, hit, "level_shift", "level_z", "level_gain", panel, "level", cfg.merge_days, cfg.window // 4)
    return flags, {k: pd.concat(v, ignore_index=True) if v else pd.DataFrame() for k, v in scans.items()}


def _panel_c_flags(hum: pd.DataFrame, activation, cfg: DiagnosticConfig) -> tuple[list[_Flag], pd.DataFrame]:
    flags, scans = [], []
    for seg in _segments(hum.index, activation):
        part = hum[seg]
        scan = scan_mean_shift(part.index, part["rh_additional_ref"].to_numpy(), cfg.window)
        scans.append(scan)
        hit = _hits(scan, "shift", "z", cfg.humidity_threshold, cfg.z_threshold)
        flags += _flags(scan, hit, "shift", "z", "shift", "c", "mean", cfg.merge_days, cfg.window // 4)
    return flags, pd.concat(scans, ignore_index=True) if scans else pd.DataFrame()


def _performance_days(perf: pd.DataFrame, series: DailySeries, policy: SeasonPolicy) -> pd.DataFrame:
    good = ~perf["flagged"].to_numpy()
    t_out = series.frame["t_out"].reindex(perf.index).to_numpy()
    return perf[good & policy.keep(perf.index, t_out)]


def _panel_d_flags(perf_days: pd.DataFrame, cfg: DiagnosticConfig) -> tuple[list[_Flag], pd.DataFrame]:
    """Performance steps must show both as a relative and as an absolute shift.

    After a genuine additive step (e.g. hot water) the relative deviation keeps
    drifting with the season, and after a multiplicative one (e.g. losses) the
    absolute deviation does; requiring both at the same split keeps those
    seasonal echoes from being reported as further changes.
    """
    q_b = perf_days["q_baseline"].to_numpy()
    diff = 100.0 * (perf_days["q_obs"].to_numpy() - q_b)
    scan = scan_mean_shift(perf_days.index, diff, cfg.window, weights=q_b)
    if scan.empty:
        return [], scan
    absolute = scan_mean_shift(perf_days.index, diff, cfg.window)
    wl, wr = _windows_cumsum(q_b, cfg.window)
    scale = (wl + wr) / (2 * cfg.window)
    scan["abs_shift"] = absolute["shift"].to_numpy() / scale
    scan["abs_z"] = absolute["z"].to_numpy()
    hit = _hits(scan, "shift", "z", cfg.performance_threshold, cfg.z_threshold)
    hit &= _hits(scan, "abs_shift", "abs_z", cfg.performance_threshold, cfg.z_threshold)
    return _flags(scan, hit, "shift", "z", "shift", "d", "mean", cfg.merge_days, cfg.window // 4), scan


def _aging(perf_days: pd.DataFrame, cfg: DiagnosticConfig) -> dict | None:
    if perf_days.empty:
        return None
    month = perf_days.index.to_period("M")
    g = perf_days.groupby(month)
    monthly = 100.0 * (g["q_obs"].sum() - g["q_baseline"].sum()) / g["q_baseline"].sum()
    monthly = monthly[g.size() >= 10]
    if len(monthly) < cfg.aging_min_months:
        return None
    t = np.asarray([(p.start_time - monthly.index[0].start_time).days for p in monthly.index], float) / 365.25
    A = np.column_stack([np.ones_like(t), t])
    coef, *_ = np.linalg.lstsq(A, monthly.to_numpy(), rcond=None)
    resid = monthly.to_numpy() - A @ coef
    s2 = resid @ resid / (len(t) - 2)
    se = np.sqrt(s2 * np.linalg.inv(A.T @ A)[1, 1])
    slope = float(coef[1])
    t_stat = slope / se if se > 0 else np.inf
    return {"slope_pp_per_year": slope, "t": float(t_stat), "n_months": int(len(t)),
            "start": monthly.index[0].start_time.date().isoformat(),
            "end": monthly.index[-1].end_time.date().isoformat()}


def classify_changes(flags: list[_Flag], aging: dict | None = None, *, renovation_dates=(),
                     cfg: DiagnosticConfig | None = None) -> ChangeReport:
    """Merge panel flags into labelled changes.

    ``flags`` come from the panel scans; ``aging`` is the performance trend
    summary (only reported when no step change was found and the trend
    passes the configured slope and t thresholds).
    """
    cfg = cfg or DiagnosticConfig()
    reno = [pd.Timestamp(_to_date(d)) for d in renovation_dates]
    groups: list[list[_Flag]] = []
    margin = pd.Timedelta(days=cfg.merge_days)
    for f in sorted(flags, key=lambda f: f.date):
        for grp in groups:
            if any(f.lo - margin <= g.hi and g.lo - margin <= f.hi for g in grp):
                grp.append(f)
                break
        else:
            groups.append([f])
    changes = []
    for grp in groups:
        kinds = {(f.panel, f.kind) for f in grp}
        if ("c", "mean") in kinds:
            cat, lead = 2, [("c", "mean")]
        elif ("a", "slope") in kinds or ("b", "slope") in kinds:
            cat, lead = 3, [("a", "slope"), ("b", "slope")]
        elif ("a", "level") in kinds:
            cat, lead = 5, [("a", "level")]
        else:
            d_dates = [f.date for f in grp]
            near = any(abs((r - d).days) <= cfg.merge_days for r in reno for d in d_dates)
            cat, lead = (4 if near else None), [("d", "mean")]
        # the panel that decides the label also dates the change
        leaders = [f for f in grp if (f.panel, f.kind) in lead] or grp
        precise = max(leaders, key=lambda f: abs(f.z))
        evidence = {}
        for f in grp:
            key = f"{f.panel}_{f.kind}"
            if key not in evidence or abs(f.z) > abs(evidence[key]["z"]):
                evidence[key] = {"shift": f.shift, "z": f.z, "date": f.date.date().isoformat()}
        lo = min(f.lo for f in grp)
        hi = max(f.hi for f in grp)
        changes.append(DetectedChange(precise.date.date(), (lo.date(), hi.date()), cat, CATEGORY_LABELS[cat], evidence))
    changes.sort(key=lambda c: c.date)
    keep_aging = None
    if aging is not None and not changes:
        if aging["slope_pp_per_year"] >= cfg.aging_slope and aging["t"] >= cfg.aging_t:
            keep_aging = dict(aging, category=1, label=CATEGORY_LABELS[1])
    return ChangeReport(changes, keep_aging)


@dataclass
class DiagnosticResult:
    supply_power: pd.DataFrame
    return_supply: pd.DataFrame
    humidity: pd.DataFrame
    performance: pd.DataFrame
    report: ChangeReport
    scans: dict = field(default_factory=dict)
    aging_trend: dict | None = None  # performance trend before the aging thresholds


def diagnose(series: DailySeries, *, activation=None, baseline=None, renovation_dates=(),
             config: DiagnosticConfig | None = None, season_policy: SeasonPolicy | None = None) -> DiagnosticResult:
    """Run all panels and classify the detected changes.

    Scans never straddle ``activation`` (the control change itself would show
    up in every panel). ``baseline`` is the performance model; when omitted a
    GAM with measured ``t_in`` is calibrated on the first 365 days after
    activation (or of the series).
    """
    from .gam import fit_gam

    cfg = config or DiagnosticConfig()
    policy = season_policy or SeasonPolicy()
    flags, scans = _panel_ab_flags(series, activation, cfg)
    hum = humidity_panel(series)
    c_flags, scans["c"] = _panel_c_flags(hum, activation, cfg)
    flags += c_flags

    if baseline is None:
        start = pd.Timestamp(_to_date(activation)) if activation is not None else series.dates.min()
        train = series.between(start.date(), (start + pd.Timedelta(days=364)).date())
        train = train.complete(["q_tot", "t_out", "phi_rad", "t_in"])
        if len(train) >= 2 * cfg.window:
            baseline = fit_gam(train, t_base="measured")
    perf = pd.DataFrame(columns=["q_obs", "q_baseline", "effect_pct", "flagged", "rolling_effect_pct", "window_id"])
    aging = None
    if baseline is not None:
        import warnings

        from .effects import TrackingWarning

        tracked = series
        if activation is not None:
            tracked = series.between(_to_date(activation), series.dates.max().date())
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TrackingWarning)
            perf = performance_panel(baseline, tracked)
        days = _performance_days(perf, series, policy)
        d_flags, scans["d"] = _panel_d_flags(days, cfg)
        flags += d_flags
        aging = _aging(days, cfg)
    report = classify_changes(flags, aging, renovation_dates=renovation_dates, cfg=cfg)
    return DiagnosticResult(
        supply_power=rolling_supply_power_fit(series),
        return_supply=rolling_return_supply_fit(series),
        humidity=hum,
        performance=perf,
        report=report,
        scans=scans,
        aging_trend=aging,
    )
