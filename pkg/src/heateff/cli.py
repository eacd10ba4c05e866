"""Command-line front end.

Every subcommand reads an optional JSON config (``--config``); flags given on
the command line win over config values. Outputs go to ``--out`` and carry
the schema version (a ``# schema_version=N`` line in CSVs, a
``schema_version`` key in JSON). Failures exit with 2 (validation),
3 (numerical), 4 (I/O) or 1 (other package errors) and print one JSON object
to stderr.

When ``--input`` is a directory, the command runs once per ``*.csv`` file in
it, writing to ``<out>/<file stem>/``; ``--jobs`` sets the worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import dataclasses
import datetime as dt
import json
import sys
import warnings
from pathlib import Path

import numpy as np
import pandas as pd

from .control_effect import (
    IsolationModelPair,
    Setback,
    calibrate_pair,
    counterfactual_series,
    decompose,
    season_summary,
)
from .core import CalibrationWindows, DailySeries, HeatingCurve, SeasonPolicy, validate_series
from .diagnostics import DiagnosticConfig, diagnose
from .effects import effect_supply_space, effect_supply_total, energy_weighted_effect, track_model_based
from .exceptions import DataValidationError, HeatEffError, NumericalError, WindowError
from .gam import GamPosterior, PriorSpec, fit_gam
from .io import (
    SCHEMA_VERSION,
    dump_json,
    load_json,
    read_table,
    read_telemetry_csv,
    write_table,
    write_telemetry_csv,
)
from .normalization import (
    HddNormalizationConfig,
    ReferenceWeather,
    SpaceHeatingModel,
    estimate_dhw_summer_mean,
    normalize_hdd_monthly,
    normalize_ratio_space,
    normalize_ratio_total,
    normalized_total,
)
from .power_models import MIN_DAYS, LinearWeatherModel, SupplyTempModel
from .simulate import ScenarioSpec, simulate, standard_scenarios

EXIT_OK, EXIT_OTHER, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 1, 2, 3, 4
MODEL_KINDS = ("gam", "linear", "supply")


class StageError(HeatEffError):
    """A pipeline stage failed; wraps the original error."""

    def __init__(self, stage: str, error: Exception):
        super().__init__(f"{stage}: {error}")
        self.stage = stage
        self.error = error
        self.exit_code = exit_code_for(error)


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, StageError):
        return exc.exit_code
    if isinstance(exc, DataValidationError):
        return EXIT_VALIDATION
    if isinstance(exc, (NumericalError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    if isinstance(exc, OSError):
        return EXIT_IO
    return EXIT_OTHER


# ------------------------------------------------------------------- config


@dataclasses.dataclass
class RunConfig:
    """Resolved options of one command run (config file merged with flags)."""

    input: str | None = None
    out: str = "out"
    reference: str | None = None
    reference_hdd: str | None = None
    model: str | None = None
    model_kind: str = "gam"
    pair: str | None = None
    metadata: str | None = None
    setbacks: str | None = None
    scenario: str | None = None
    scenario_spec: str | None = None
    seed: int | None = None
    activation: str | None = None
    days_before: int = 365
    days_after: int = 365
    windows: dict | None = None
    start: str | None = None
    end: str | None = None
    t_base: float | str = 21.0
    include_storage: bool = False
    prior: dict | None = None
    cold_anchor: bool = True
    min_heating_days: int | None = None
    method: str | None = None
    dhw_kw: float | None = None
    hdd: dict | None = None
    heating_curve: dict | None = None
    components: list | None = None
    renovation_dates: list | None = None
    diagnostics: dict | None = None
    season_start_month: int = 7
    window: int = 30
    format: str = "csv"
    jobs: int = 1

    def validate(self) -> "RunConfig":
        for name in ("input", "reference", "reference_hdd", "model", "pair", "metadata", "setbacks", "scenario_spec"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise FileNotFoundError(f"{name} file not found: {path}")
        if self.format not in ("csv", "json"):
            raise DataValidationError("format must be 'csv' or 'json'")
        if self.model_kind not in MODEL_KINDS:
            raise DataValidationError(f"model kind must be one of {MODEL_KINDS}")
        if self.jobs < 1:
            raise DataValidationError("jobs must be at least 1")
        if self.windows is not None:
            CalibrationWindows.from_dict(self.windows)
        return self

    def calibration_windows(self, meta_windows: CalibrationWindows | None = None) -> CalibrationWindows:
        if self.windows is not None:
            return CalibrationWindows.from_dict(self.windows)
        if self.activation is not None:
            return CalibrationWindows.around(self.activation, self.days_before, self.days_after)
        if meta_windows is not None:
            return meta_windows
        raise DataValidationError("calibration windows need --activation, a windows config or metadata")

    def prior_spec(self) -> PriorSpec:
        return PriorSpec.from_dict(self.prior) if self.prior else PriorSpec()


_FIELDS = {f.name for f in dataclasses.fields(RunConfig)}


def build_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        raw = load_json(args.config)
        raw.pop("schema_version", None)
        unknown = set(raw) - _FIELDS
        if unknown:
            raise DataValidationError(f"unknown config keys: {sorted(unknown)}")
        values.update(raw)
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return RunConfig(**values).validate()


# ------------------------------------------------------------------ helpers


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_frame(frame: pd.DataFrame, path: Path, fmt: str) -> Path:
    """Write a dated frame as CSV or JSON records; returns the written path."""
    frame = frame.copy()
    if isinstance(frame.index, pd.DatetimeIndex):
        frame.index = frame.index.strftime("%Y-%m-%d")
        frame.index.name = "date"
    if fmt == "json":
        path = path.with_suffix(".json")
        dump_json({"rows": frame.reset_index().to_dict(orient="records")}, path)
    else:
        path = path.with_suffix(".csv")
        write_table(frame, path)
    return path


def _load_series(cfg: RunConfig) -> tuple[DailySeries, CalibrationWindows | None]:
    if cfg.input is None:
        raise DataValidationError("--input is required")
    meta_windows = None
    meta = {}
    if cfg.metadata:
        d = load_json(cfg.metadata)
        meta = {k: d[k] for k in ("building_id", "location_id", "floor_area_m2") if d.get(k) is not None}
        if d.get("windows"):
            meta_windows = CalibrationWindows.from_dict(d["windows"])
    series = read_telemetry_csv(cfg.input, **meta)
    return series.regularize(), meta_windows


def _load_setbacks(path) -> list[Setback]:
    t = read_table(path)
    missing = {"start", "end", "depth"} - set(t.columns)
    if missing:
        raise DataValidationError(f"setback file lacks columns {sorted(missing)}")
    return [
        Setback(pd.Timestamp(r.start).to_pydatetime(), pd.Timestamp(r.end).to_pydatetime(), float(r.depth))
        for r in t.itertuples()
    ]


def _write_setbacks(schedule, path: Path) -> None:
    frame = pd.DataFrame(
        {
            "start": [s.start.isoformat() for s in schedule],
            "end": [s.end.isoformat() for s in schedule],
            "depth": [float(s.depth) for s in schedule],
        }
    )
    write_table(frame, path, index=False)


def model_to_dict(model) -> dict:
    if isinstance(model, (GamPosterior, IsolationModelPair, LinearWeatherModel, SupplyTempModel)):
        return model.to_dict()
    raise DataValidationError(f"cannot serialize model of type {type(model).__name__}")


def load_model(path):
    """Load any model bundle written by ``calibrate`` or ``isolate``."""
    d = load_json(path)
    d = d.get("model", d)
    kind = d.get("kind")
    loaders = {
        "gam": GamPosterior.from_dict,
        "linear_weather": LinearWeatherModel.from_dict,
        "supply_temp": SupplyTempModel.from_dict,
        "isolation_pair": IsolationModelPair.from_dict,
    }
    if kind not in loaders:
        raise DataValidationError(f"{path}: unknown model kind {kind!r}")
    return loaders[kind](d)


def _fit_single(cfg: RunConfig, data: DailySeries):
    t_base = cfg.t_base
    if cfg.model_kind == "gam":
        need = ["q_tot", "t_out", "phi_rad"] + (["t_in"] if t_base == "measured" or cfg.include_storage else [])
        data = data.complete(need)
        if len(data) < MIN_DAYS:
            raise WindowError(f"calibration window has {len(data)} complete days, need {MIN_DAYS}")
        return fit_gam(data, t_base=t_base, prior=cfg.prior_spec(), include_storage=cfg.include_storage), data
    if cfg.model_kind == "linear":
        need = ["q_tot", "t_out", "phi_rad"] + (["t_in"] if t_base == "measured" or cfg.include_storage else [])
        data = data.complete(need)
        if len(data) < MIN_DAYS:
            raise WindowError(f"calibration window has {len(data)} complete days, need {MIN_DAYS}")
        return LinearWeatherModel(t_base, cfg.include_storage).fit(data, data["q_tot"]), data
    data = data.complete(["q_tot", "t_sup"])
    if len(data) < MIN_DAYS:
        raise WindowError(f"calibration window has {len(data)} complete days, need {MIN_DAYS}")
    return SupplyTempModel().fit(data, data["q_tot"]), data


def _fit_report(model, data: DailySeries) -> dict:
    from .effects import predict_on_complete_days

    pred, ok = predict_on_complete_days(model, data.frame)
    y = data["q_tot"]
    resid = y[ok] - pred[ok]
    flags = []
    if isinstance(model, LinearWeatherModel) and model.not_identifiable_:
        flags.append("not_identifiable:" + ",".join(model.not_identifiable_))
    if isinstance(model, GamPosterior) and model.n_train < 2 * MIN_DAYS:
        flags.append("short_window")
    return {
        "n": int(ok.sum()),
        "residual_std": float(np.std(resid)) if len(resid) else None,
        "start": data.dates.min().date().isoformat(),
        "end": data.dates.max().date().isoformat(),
        "flags": flags,
    }


def _reference_weather(cfg: RunConfig, series: DailySeries) -> ReferenceWeather:
    if cfg.reference_hdd:
        d = load_json(cfg.reference_hdd)
        d.pop("schema_version", None)
        return ReferenceWeather(hdd=d.get("hdd", d))
    if cfg.hdd:
        return ReferenceWeather(hdd=cfg.hdd)
    if cfg.reference:
        return ReferenceWeather.from_series(read_telemetry_csv(cfg.reference).regularize())
    # typical year from the input's own weather, averaged by calendar day
    w = series.frame[["t_out", "phi_rad"]].dropna()
    by_day = w.groupby([w.index.month, w.index.day]).mean()
    dates = pd.DatetimeIndex([dt.date(2000, m, d) for m, d in by_day.index])
    return ReferenceWeather(frame=pd.DataFrame(by_day.to_numpy(), index=dates, columns=["t_out", "phi_rad"]))


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except StageError:
        raise
    except (HeatEffError, OSError, np.linalg.LinAlgError) as exc:
        raise StageError(name, exc) from exc


# ----------------------------------------------------------------- commands


def cmd_simulate(cfg: RunConfig) -> dict:
    if cfg.scenario_spec:
        d = load_json(cfg.scenario_spec)
        d.pop("schema_version", None)
        spec = ScenarioSpec.from_dict(d.get("spec", d))
    else:
        catalog = standard_scenarios()
        if cfg.scenario not in catalog:
            raise DataValidationError(f"unknown scenario {cfg.scenario!r}; choose from {sorted(catalog)}")
        spec = catalog[cfg.scenario]
    if cfg.seed is not None:
        spec = spec.replace(seed=int(cfg.seed))
    series, truth = simulate(spec)
    out = _out_dir(cfg)
    write_telemetry_csv(series, out / "telemetry.csv")
    write_table(truth.frame.rename_axis("date").set_axis(truth.frame.index.strftime("%Y-%m-%d")), out / "ground_truth.csv")
    _write_setbacks(truth.setbacks, out / "setbacks.csv")
    windows = spec.windows()
    dump_json(
        {
            "spec": spec.to_dict(),
            "activation": spec.activation.isoformat(),
            "windows": windows.to_dict(),
            "building_id": spec.name,
            "noise_std": truth.noise_std,
            "n_clipped": truth.n_clipped,
        },
        out / "scenario.json",
    )
    return {"telemetry": str(out / "telemetry.csv"), "days": len(series)}


def cmd_validate(cfg: RunConfig) -> dict:
    series, _ = _load_series(cfg)
    report = validate_series(series)
    dump_json({"report": report.to_dict(), "n_days": len(series)}, _out_dir(cfg) / "validation.json")
    if not report.ok:
        raise DataValidationError(f"{report.n_violations} validation violations; see validation.json")
    return {"n_days": len(series)}


def cmd_calibrate(cfg: RunConfig) -> dict:
    series, meta_windows = _load_series(cfg)
    out = _out_dir(cfg)
    if cfg.method == "pair":
        windows = cfg.calibration_windows(meta_windows)
        pair = _calibrate_pair(cfg, series, windows)
        dump_json({"model": pair.to_dict()}, out / "model.json")
        report = {
            "m_ref": _fit_report(pair.m_ref, series.between(windows.pre_start, windows.pre_end)),
            "m_ic": _fit_report(pair.m_ic, series.between(windows.post_start, windows.post_end)),
        }
        dump_json({"fit": report}, out / "fit_report.json")
        return report
    start = cfg.start or series.dates.min().date()
    end = cfg.end or series.dates.max().date()
    data = series.between(start, end)
    model, used = _fit_single(cfg, data)
    dump_json({"model": model_to_dict(model)}, out / "model.json")
    report = _fit_report(model, used)
    dump_json({"fit": report}, out / "fit_report.json")
    return report


def _calibrate_pair(cfg: RunConfig, series: DailySeries, windows: CalibrationWindows) -> IsolationModelPair:
    kwargs = {"cold_anchor": cfg.cold_anchor}
    if cfg.min_heating_days is not None:
        kwargs["min_heating_days"] = cfg.min_heating_days
    t_base = cfg.t_base if cfg.t_base != "measured" else 21.0
    return calibrate_pair(series, windows, cfg.prior_spec(), t_base=float(t_base), **kwargs)


def cmd_normalize(cfg: RunConfig) -> dict:
    series, _ = _load_series(cfg)
    out = _out_dir(cfg)
    method = cfg.method or "hdd"
    ref = _reference_weather(cfg, series)
    if method == "hdd":
        policy = "measured" if cfg.dhw_kw is not None else "summer_mean"
        hcfg = HddNormalizationConfig(dhw_policy=policy, dhw_measured_kw=cfg.dhw_kw)
        result = normalize_hdd_monthly(series, ref, hcfg)
        path = _write_frame(result.set_axis(pd.Index(result.index.strftime("%Y-%m"), name="month")), out / "normalized", cfg.format)
        summary = {
            "method": method,
            "e_obs_kwh": float(result["e_obs"].sum()),
            "e_ref_kwh": float(result["e_ref"].sum(min_count=1)) if result["e_ref"].notna().any() else None,
            "n_flagged": int((result["flag"] != "").sum()),
        }
    elif method in ("ratio_total", "ratio_space"):
        if cfg.model is None:
            raise DataValidationError("ratio normalization needs --model")
        model = load_model(cfg.model)
        if isinstance(model, IsolationModelPair):
            model = model.m_ic
        if method == "ratio_total":
            result = normalize_ratio_total(model, series, ref)
        else:
            dhw = cfg.dhw_kw if cfg.dhw_kw is not None else estimate_dhw_summer_mean(series)
            result = normalize_ratio_space(SpaceHeatingModel(model, dhw), series, ref, dhw)
        path = _write_frame(result, out / "normalized", cfg.format)
        summary = {"method": method, **normalized_total(result)}
    else:
        raise DataValidationError(f"unknown normalization method {method!r}")
    dump_json({"summary": summary}, out / "normalize_summary.json")
    return {"output": str(path)}


def cmd_track(cfg: RunConfig) -> dict:
    series, _ = _load_series(cfg)
    out = _out_dir(cfg)
    method = cfg.method or "model"
    frame = series.frame
    if method == "model":
        if cfg.model is None:
            raise DataValidationError("model-based tracking needs --model")
        model = load_model(cfg.model)
        if isinstance(model, IsolationModelPair):
            model = model.m_ref
        start = cfg.start or series.dates.min().date()
        end = cfg.end or series.dates.max().date()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            points = track_model_based(model, series.between(start, end), window=cfg.window)
        summary = {
            "method": method,
            "effect_pct": energy_weighted_effect(points),
            "n_flagged": int(points["flagged"].sum()),
            "warnings": [str(w.message) for w in caught],
        }
    elif method in ("supply_total", "supply_space"):
        if cfg.heating_curve is None:
            raise DataValidationError("supply-temperature tracking needs a heating_curve in the config")
        curve = HeatingCurve.from_dict(cfg.heating_curve)
        t_sup_hc = curve(frame["t_out"].to_numpy(dtype=float))
        t_in = frame["t_in"].to_numpy(dtype=float)
        t_in = np.where(np.isfinite(t_in), t_in, 21.0)
        if method == "supply_total":
            if cfg.model is None:
                raise DataValidationError("supply_total tracking needs a supply-temperature --model")
            model = load_model(cfg.model)
            eff, flagged = effect_supply_total(model, frame["t_sup"], t_sup_hc, t_in, return_flags=True)
        else:
            eff, flagged = effect_supply_space(frame["t_sup"], t_sup_hc, t_in, return_flags=True)
        flagged = flagged | ~np.isfinite(frame["t_sup"].to_numpy(dtype=float))
        eff = np.where(flagged, np.nan, eff)
        points = pd.DataFrame({"t_sup_obs": frame["t_sup"], "t_sup_hc": t_sup_hc, "effect_pct": 100.0 * eff,
                               "flagged": flagged}, index=frame.index)
        points["rolling_effect_pct"] = points["effect_pct"].rolling(f"{cfg.window}D", min_periods=1).mean()
        summary = {"method": method, "mean_effect_pct": float(np.nanmean(points["effect_pct"])) if (~flagged).any() else None,
                   "n_flagged": int(flagged.sum())}
    else:
        raise DataValidationError(f"unknown tracking method {method!r}")
    _write_frame(points, out / "tracking", cfg.format)
    _write_frame(points[["effect_pct"]], out / "plot_data", "csv")
    dump_json({"summary": summary}, out / "track_summary.json")
    return summary


def _effects_outputs(cfg: RunConfig, pair: IsolationModelPair, frame: pd.DataFrame, out: Path) -> dict:
    _write_frame(frame, out / "effects", cfg.format)
    summary = {
        "seasons": season_summary(frame, start_month=cfg.season_start_month),
        "heating_season": season_summary(frame, start_month=cfg.season_start_month, season_policy=SeasonPolicy()),
    }
    dump_json(summary, out / "season_summary.json")
    dump_json({"model": pair.to_dict()}, out / "model_pair.json")
    return summary


def _pair_for(cfg: RunConfig, series: DailySeries, meta_windows) -> IsolationModelPair:
    if cfg.pair:
        pair = load_model(cfg.pair)
        if not isinstance(pair, IsolationModelPair):
            raise DataValidationError("--pair must be a model-pair bundle")
        return pair
    return _calibrate_pair(cfg, series, cfg.calibration_windows(meta_windows))


def _post_span(pair: IsolationModelPair, series: DailySeries, cfg: RunConfig) -> DailySeries:
    start = cfg.start or pair.windows.post_start
    end = cfg.end or series.dates.max().date()
    return series.between(start, end)


def cmd_isolate(cfg: RunConfig) -> dict:
    series, meta_windows = _load_series(cfg)
    pair = _pair_for(cfg, series, meta_windows)
    frame = counterfactual_series(pair, _post_span(pair, series, cfg))
    return _effects_outputs(cfg, pair, frame, _out_dir(cfg))


def cmd_decompose(cfg: RunConfig) -> dict:
    series, meta_windows = _load_series(cfg)
    pair = _pair_for(cfg, series, meta_windows)
    schedule = _load_setbacks(cfg.setbacks) if cfg.setbacks else None
    components = tuple(cfg.components or (("solar", "setback") if schedule else ("solar",)))
    frame = decompose(pair, _post_span(pair, series, cfg), components, setback_schedule=schedule)
    return _effects_outputs(cfg, pair, frame, _out_dir(cfg))


def cmd_diagnose(cfg: RunConfig) -> dict:
    series, meta_windows = _load_series(cfg)
    activation = cfg.activation or (meta_windows.activation_date if meta_windows else None)
    dcfg = DiagnosticConfig(**(cfg.diagnostics or {}))
    baseline = load_model(cfg.model) if cfg.model else None
    if isinstance(baseline, IsolationModelPair):
        baseline = baseline.m_ic
    res = diagnose(series, activation=activation, baseline=baseline,
                   renovation_dates=cfg.renovation_dates or (), config=dcfg)
    out = _out_dir(cfg)
    _write_frame(res.supply_power, out / "panel_a_supply_power", "csv")
    _write_frame(res.return_supply, out / "panel_b_return_supply", "csv")
    _write_frame(res.humidity, out / "panel_c_humidity", "csv")
    _write_frame(res.performance, out / "panel_d_performance", "csv")
    report = res.report.to_dict()
    report["aging_trend"] = res.aging_trend
    dump_json({"report": report}, out / "change_report.json")
    return report


def cmd_pipeline(cfg: RunConfig) -> dict:
    out = _out_dir(cfg)
    if cfg.input is None:
        if cfg.scenario is None and cfg.scenario_spec is None:
            raise DataValidationError("pipeline needs --input or --scenario")
        sim_cfg = dataclasses.replace(cfg, out=str(out / "simulate"))
        _stage("simulate", cmd_simulate, sim_cfg)
        cfg = dataclasses.replace(
            cfg,
            input=str(out / "simulate" / "telemetry.csv"),
            metadata=cfg.metadata or str(out / "simulate" / "scenario.json"),
            setbacks=cfg.setbacks or str(out / "simulate" / "setbacks.csv"),
        )
    series, meta_windows = _stage("ingest", _load_series, cfg)
    windows = _stage("windows", cfg.calibration_windows, meta_windows)
    report = validate_series(series)
    dump_json({"report": report.to_dict(), "n_days": len(series)}, out / "validation.json")

    diag_cfg = dataclasses.replace(cfg, out=str(out / "diagnose"), activation=windows.activation_date.isoformat())
    changes = _stage("diagnose", cmd_diagnose, diag_cfg)

    post = series.between(windows.post_start, series.dates.max().date())
    if not post.frame["t_in"].notna().any():
        raise StageError("calibrate", DataValidationError("no measured t_in after activation"))
    pair = _stage("calibrate", _calibrate_pair, cfg, series, windows)
    _stage("isolate", counterfactual_series, pair, post)
    schedule = _stage("decompose", _load_setbacks, cfg.setbacks) if cfg.setbacks else None
    components = tuple(cfg.components or (("solar", "setback") if schedule else ("solar",)))
    frame = _stage("decompose", decompose, pair, post, components, setback_schedule=schedule)
    _write_frame(frame, out / "effects", cfg.format)
    dump_json({"model": pair.to_dict()}, out / "model_pair.json")

    ref = _stage("normalize", _reference_weather, cfg, series)
    norm = _stage("normalize", normalize_ratio_total, pair.m_ic, post, ref)
    _write_frame(norm, out / "normalized", cfg.format)

    seasons = season_summary(frame, start_month=cfg.season_start_month)
    heating = season_summary(frame, start_month=cfg.season_start_month, season_policy=SeasonPolicy())
    summary = {
        "windows": windows.to_dict(),
        "seasons": seasons,
        "heating_season": heating,
        "normalized": normalized_total(norm),
        "changes": changes,
    }
    dump_json(summary, out / "season_summary.json")
    return {k: {"effect_pct": v["effect_pct"]} for k, v in seasons.items()}


COMMANDS = {
    "simulate": cmd_simulate,
    "validate": cmd_validate,
    "calibrate": cmd_calibrate,
    "normalize": cmd_normalize,
    "track": cmd_track,
    "isolate": cmd_isolate,
    "decompose": cmd_decompose,
    "diagnose": cmd_diagnose,
    "pipeline": cmd_pipeline,
}


# ------------------------------------------------------------------ parsing


def _t_base(value: str):
    return value if value == "measured" else float(value)


def _json_arg(value: str):
    try:
        return json.loads(value)
    except json.JSONDecodeError as exc:
        raise argparse.ArgumentTypeError(f"invalid JSON: {exc}") from exc


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="heateff", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, inputs=True):
        p.add_argument("--config", help="JSON config file; flags override its values")
        p.add_argument("--out", help="output directory")
        p.add_argument("--format", choices=("csv", "json"), help="format of per-day tables")
        if inputs:
            p.add_argument("--input", help="telemetry CSV, or a directory of them")
            p.add_argument("--metadata", help="metadata JSON (windows, activation, building id)")
            p.add_argument("--jobs", type=int, help="parallel workers for a directory input")

    def windows(p):
        p.add_argument("--activation", help="activation date of intelligent control")
        p.add_argument("--days-before", dest="days_before", type=int)
        p.add_argument("--days-after", dest="days_after", type=int)
        p.add_argument("--t-base", dest="t_base", type=_t_base, help="base temperature or 'measured'")
        p.add_argument("--prior", type=_json_arg, help="prior overrides as JSON")
        p.add_argument("--no-cold-anchor", dest="cold_anchor", action="store_const", const=False)
        p.add_argument("--min-heating-days", dest="min_heating_days", type=int)

    p = sub.add_parser("simulate", help="generate a synthetic scenario")
    common(p, inputs=False)
    p.add_argument("--scenario", help="name from the bundled catalog")
    p.add_argument("--scenario-spec", dest="scenario_spec", help="scenario JSON instead of a catalog name")
    p.add_argument("--seed", type=int)

    p = sub.add_parser("validate", help="check telemetry against physical ranges")
    common(p)

    p = sub.add_parser("calibrate", help="fit a power model or a model pair")
    common(p)
    windows(p)
    p.add_argument("--model-kind", dest="model_kind", choices=MODEL_KINDS)
    p.add_argument("--method", choices=("single", "pair"), help="single model or reference/control pair")
    p.add_argument("--start")
    p.add_argument("--end")
    p.add_argument("--include-storage", dest="include_storage", action="store_const", const=True)

    p = sub.add_parser("normalize", help="weather-normalize consumption")
    common(p)
    p.add_argument("--method", choices=("hdd", "ratio_total", "ratio_space"))
    p.add_argument("--reference", help="reference weather CSV (telemetry schema)")
    p.add_argument("--reference-hdd", dest="reference_hdd", help="JSON of monthly reference HDDs")
    p.add_argument("--model", help="model bundle for the ratio methods")
    p.add_argument("--dhw-kw", dest="dhw_kw", type=float)

    p = sub.add_parser("track", help="before/after effect tracking")
    common(p)
    p.add_argument("--method", choices=("model", "supply_total", "supply_space"))
    p.add_argument("--model", help="baseline model bundle")
    p.add_argument("--start")
    p.add_argument("--end")
    p.add_argument("--window", type=int, help="rolling window in days")

    for name, helptext in (("isolate", "control effect from a model pair"),
                           ("decompose", "split the control effect into components")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        windows(p)
        p.add_argument("--pair", help="existing model-pair bundle")
        p.add_argument("--start")
        p.add_argument("--end")
        if name == "decompose":
            p.add_argument("--setbacks", help="setback schedule CSV (start, end, depth)")
            p.add_argument("--components", nargs="+")

    p = sub.add_parser("diagnose", help="detect non-control changes")
    common(p)
    p.add_argument("--activation")
    p.add_argument("--model", help="performance baseline bundle")
    p.add_argument("--renovation-dates", dest="renovation_dates", nargs="+")
    p.add_argument("--diagnostics", type=_json_arg, help="threshold overrides as JSON")

    p = sub.add_parser("pipeline", help="simulate or ingest, then diagnose, isolate, decompose, normalize")
    common(p)
    windows(p)
    p.add_argument("--scenario")
    p.add_argument("--scenario-spec", dest="scenario_spec")
    p.add_argument("--seed", type=int)
    p.add_argument("--setbacks")
    p.add_argument("--reference")
    return parser


def _error_payload(exc: BaseException, command: str) -> dict:
    payload = {
        "command": command,
        "error": type(exc.error if isinstance(exc, StageError) else exc).__name__,
        "message": str(exc.error if isinstance(exc, StageError) else exc),
        "exit_code": exit_code_for(exc),
        "schema_version": SCHEMA_VERSION,
    }
    if isinstance(exc, StageError):
        payload["stage"] = exc.stage
    return payload


def _run_one(command: str, cfg: RunConfig) -> tuple[int, dict]:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            COMMANDS[command](cfg)
        return EXIT_OK, {}
    except (HeatEffError, OSError, np.linalg.LinAlgError) as exc:
        return exit_code_for(exc), _error_payload(exc, command)


def _run_portfolio(command: str, cfg: RunConfig) -> tuple[int, dict]:
    files = sorted(Path(cfg.input).glob("*.csv"))
    if not files:
        raise DataValidationError(f"no CSV files in {cfg.input}")
    jobs = [(command, dataclasses.replace(cfg, input=str(f), out=str(Path(cfg.out) / f.stem))) for f in files]
    with concurrent.futures.ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
        results = list(pool.map(_run_one, *zip(*jobs)))
    status = {f.stem: {"exit_code": code, **({"error": err} if err else {})} for f, (code, err) in zip(files, results)}
    _out_dir(cfg)
    dump_json({"buildings": status}, Path(cfg.out) / "portfolio.json")
    worst = max(code for code, _ in results)
    return worst, ({} if worst == 0 else {"command": command, "error": "PortfolioError",
                                          "message": "some buildings failed; see portfolio.json",
                                          "exit_code": worst, "schema_version": SCHEMA_VERSION})


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = build_config(args)
        if cfg.input is not None and Path(cfg.input).is_dir():
            code, err = _run_portfolio(args.command, cfg)
        else:
            code, err = _run_one(args.command, cfg)
    except (HeatEffError, OSError) as exc:
        code, err = exit_code_for(exc), _error_payload(exc, args.command)
    if code:
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
