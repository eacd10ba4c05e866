import json

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heateff.core import FIELDS, CalibrationWindows, DailySeries
from heateff.exceptions import DataValidationError
from heateff.io import (
    CSV_HEADER,
    SCHEMA_VERSION,
    dump_json,
    load_json,
    read_metadata,
    read_telemetry_csv,
    write_metadata,
    write_telemetry_csv,
)

reals = st.one_of(st.floats(-1e6, 1e6, allow_nan=False, allow_infinity=False), st.just(np.nan))


@settings(max_examples=40, deadline=None)
@given(data=st.data(), n=st.integers(1, 30))
def test_csv_round_trip_is_identity(tmp_path_factory, data, n):
    values = {f: data.draw(arrays(float, n, elements=reals)) for f in FIELDS}
    start = data.draw(st.dates(pd.Timestamp("1990-01-01").date(), pd.Timestamp("2090-01-01").date()))
    idx = pd.date_range(start, periods=n, freq="D")
    series = DailySeries(pd.DataFrame(values, index=idx))
    path = tmp_path_factory.mktemp("csv") / "t.csv"
    write_telemetry_csv(series, path)
    back = read_telemetry_csv(path)
    assert list(back.dates) == list(series.dates)
    for f in FIELDS:
        # repr-precision floats round-trip bit for bit
        np.testing.assert_array_equal(back[f], series[f])


def test_csv_header_and_schema_line(tmp_path, scenario):
    _, series, _ = scenario("null")
    path = tmp_path / "t.csv"
    write_telemetry_csv(series.between("2019-01-01", "2019-01-05"), path)
    lines = path.read_text().splitlines()
    assert lines[0] == f"# schema_version={SCHEMA_VERSION}"
    assert lines[1].split(",") == CSV_HEADER


def test_empty_cells_are_missing(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text(",".join(CSV_HEADER) + "\n2020-01-01,5.0,,,,,-3.0,,0\n")
    s = read_telemetry_csv(path)
    assert s["q_tot"][0] == 5.0
    assert np.isnan(s["t_in"][0])


def test_unknown_column_rejected(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("date,q_tot_kw,bogus\n2020-01-01,1,2\n")
    with pytest.raises(DataValidationError):
        read_telemetry_csv(path)


def test_bad_dates_rejected(tmp_path):
    path = tmp_path / "t.csv"
    path.write_text("date,q_tot_kw\nnot-a-date,1\n")
    with pytest.raises(DataValidationError):
        read_telemetry_csv(path)


def test_json_has_schema_version_and_strict_nulls(tmp_path):
    path = tmp_path / "x.json"
    dump_json({"a": float("nan"), "b": [1.0, float("inf")], "c": np.float64(2.5)}, path)
    d = json.loads(path.read_text())
    assert d == {"schema_version": SCHEMA_VERSION, "a": None, "b": [1.0, None], "c": 2.5}
    assert load_json(path) == d


def test_metadata_round_trip(tmp_path):
    s = DailySeries(building_id="b1", floor_area_m2=1200.0)
    w = CalibrationWindows.around("2020-07-01")
    write_metadata(tmp_path / "m.json", s, w, note="x")
    meta, windows = read_metadata(tmp_path / "m.json")
    assert meta == {"building_id": "b1", "location_id": None, "floor_area_m2": 1200.0}
    assert windows == w
