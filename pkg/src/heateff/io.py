"""CSV / JSON persistence for telemetry, metadata and report tables."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np
import pandas as pd

from .core import FIELDS, CalibrationWindows, DailySeries
from .exceptions import DataValidationError

SCHEMA_VERSION = 1

CSV_COLUMNS = {
    "q_tot": "q_tot_kw",
    "t_sup": "t_sup_c",
    "t_ret": "t_ret_c",
    "t_in": "t_in_c",
    "rh_in": "rh_in_pct",
    "t_out": "t_out_c",
    "rh_out": "rh_out_pct",
    "phi_rad": "phi_rad_wm2",
}
CSV_HEADER = ["date"] + [CSV_COLUMNS[f] for f in FIELDS]


def _schema_line() -> str:
    return f"# schema_version={SCHEMA_VERSION}\n"


def read_telemetry_csv(path, **meta) -> DailySeries:
    """Read the daily telemetry CSV; empty cells become NaN.

    Lines starting with ``#`` are comments. The power column may be absent
    (reference-weather files).
    """
    try:
        frame = pd.read_csv(path, comment="#", float_precision="round_trip")
    except pd.errors.EmptyDataError as exc:
        raise DataValidationError(f"{path}: empty CSV") from exc
    if "date" not in frame.columns:
        raise DataValidationError(f"{path}: missing 'date' column")
    unknown = set(frame.columns) - set(CSV_HEADER)
    if unknown:
        raise DataValidationError(f"{path}: unknown columns {sorted(unknown)}")
    try:
        index = pd.DatetimeIndex(pd.to_datetime(frame.pop("date"), format="ISO8601"), name="date")
    except (ValueError, TypeError) as exc:
        raise DataValidationError(f"{path}: unparseable dates") from exc
    inverse = {v: k for k, v in CSV_COLUMNS.items()}
    frame = frame.rename(columns=inverse)
    frame.index = index
    return DailySeries(frame.apply(pd.to_numeric, errors="coerce"), **meta)


def write_telemetry_csv(series: DailySeries, path, *, schema_comment: bool = True) -> None:
    frame = series.frame[list(FIELDS)].rename(columns=CSV_COLUMNS)
    frame.index = frame.index.strftime("%Y-%m-%d")
    frame.index.name = "date"
    write_table(frame, path, schema_comment=schema_comment)


def write_table(frame: pd.DataFrame, path, *, schema_comment: bool = True, index: bool = True) -> None:
    """Write a report table with ``repr``-precision floats and ``\\n`` line ends."""
    with open(path, "w", newline="") as fh:
        if schema_comment:
            fh.write(_schema_line())
        frame.to_csv(fh, index=index, lineterminator="\n", na_rep="")


def read_table(path, **kwargs) -> pd.DataFrame:
    return pd.read_csv(path, comment="#", float_precision="round_trip", **kwargs)


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if hasattr(obj, "isoformat"):
        return obj.isoformat()
    raise TypeError(f"not JSON serializable: {type(obj).__name__}")


def _finite(obj):
    """Replace non-finite floats with None so the output is strict JSON."""
    if isinstance(obj, dict):
        return {k: _finite(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_finite(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _finite(obj.tolist())
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    return obj


def dump_json(obj: dict, path) -> None:
    """Write ``obj`` with the schema version; NaN and infinities become null."""
    payload = _finite({"schema_version": SCHEMA_VERSION, **obj})
    text = json.dumps(payload, indent=2, sort_keys=True, default=_json_default, allow_nan=False)
    Path(path).write_text(text + "\n")


def load_json(path) -> dict:
    return json.loads(Path(path).read_text())


def write_metadata(path, series: DailySeries, windows: CalibrationWindows | None = None, **extra) -> None:
    d = dict(series.meta)
    if windows is not None:
        d["windows"] = windows.to_dict()
    d.update(extra)
    dump_json(d, path)


def read_metadata(path) -> tuple[dict, CalibrationWindows | None]:
    d = load_json(path)
    windows = CalibrationWindows.from_dict(d["windows"]) if d.get("windows") else None
    meta = {k: d.get(k) for k in ("building_id", "location_id", "floor_area_m2")}
    return meta, windows
