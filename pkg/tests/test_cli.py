import json

import numpy as np
import pytest

from heateff.cli import load_model, main
from heateff.gam import fit_gam
from heateff.io import SCHEMA_VERSION, read_telemetry_csv, write_telemetry_csv


@pytest.fixture(scope="module")
def sim_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    assert main(["simulate", "--scenario", "null", "--out", str(out)]) == 0
    return out


def _error(capsys) -> dict:
    return json.loads(capsys.readouterr().err.strip().splitlines()[-1])


def test_simulate_writes_bundle(sim_dir):
    for name in ("telemetry.csv", "ground_truth.csv", "setbacks.csv", "scenario.json"):
        assert (sim_dir / name).exists()
    meta = json.loads((sim_dir / "scenario.json").read_text())
    assert meta["schema_version"] == SCHEMA_VERSION
    assert meta["activation"] == "2019-07-01"


def test_calibrate_round_trip(sim_dir, tmp_path):
    tele = sim_dir / "telemetry.csv"
    args = ["calibrate", "--input", str(tele), "--start", "2018-07-01", "--end", "2019-06-30", "--out", str(tmp_path)]
    assert main(args) == 0
    model = load_model(tmp_path / "model.json")
    series = read_telemetry_csv(tele).between("2018-07-01", "2019-06-30")
    direct = fit_gam(series.complete(["q_tot", "t_out", "phi_rad"]), t_base=21.0)
    X = series.frame[["t_out", "phi_rad"]]
    pred = model.predict(X)
    assert np.isfinite(pred).all()
    np.testing.assert_allclose(pred, direct.predict(X), rtol=1e-12, atol=1e-12)
    report = json.loads((tmp_path / "fit_report.json").read_text())
    assert report["fit"]["n"] > 300


def test_pair_calibration(sim_dir, tmp_path):
    args = ["calibrate", "--method", "pair", "--input", str(sim_dir / "telemetry.csv"),
            "--metadata", str(sim_dir / "scenario.json"), "--out", str(tmp_path)]
    assert main(args) == 0
    pair = load_model(tmp_path / "model.json")
    assert pair.m_ic.uses_measured_t_in and not pair.m_ref.uses_measured_t_in


def test_short_window_fails(sim_dir, tmp_path, capsys):
    args = ["calibrate", "--input", str(sim_dir / "telemetry.csv"), "--start", "2019-01-01", "--end", "2019-01-05",
            "--out", str(tmp_path)]
    code = main(args)
    assert code != 0
    err = _error(capsys)
    assert err["error"] == "WindowError" and err["exit_code"] == code


def test_missing_file_is_io_error(tmp_path, capsys):
    assert main(["validate", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 4
    assert _error(capsys)["exit_code"] == 4


def test_missing_indoor_temperature_names_stage(sim_dir, tmp_path, capsys):
    series = read_telemetry_csv(sim_dir / "telemetry.csv")
    write_telemetry_csv(series.with_columns(t_in=np.full(len(series), np.nan)), tmp_path / "no_tin.csv")
    args = ["pipeline", "--input", str(tmp_path / "no_tin.csv"), "--metadata", str(sim_dir / "scenario.json"),
            "--out", str(tmp_path / "out")]
    assert main(args) == 2
    err = _error(capsys)
    assert err["stage"] == "calibrate" and "t_in" in err["message"]


def test_config_file_and_flag_precedence(sim_dir, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"model_kind": "linear", "start": "2018-07-01", "end": "2019-06-30",
                               "out": str(tmp_path / "from_config")}))
    assert main(["calibrate", "--config", str(cfg), "--input", str(sim_dir / "telemetry.csv")]) == 0
    assert load_model(tmp_path / "from_config" / "model.json").__class__.__name__ == "LinearWeatherModel"
    args = ["calibrate", "--config", str(cfg), "--input", str(sim_dir / "telemetry.csv"), "--model-kind", "supply",
            "--out", str(tmp_path / "flag")]
    assert main(args) == 0
    assert load_model(tmp_path / "flag" / "model.json").__class__.__name__ == "SupplyTempModel"


def test_unknown_config_key_rejected(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bogus": 1}))
    assert main(["simulate", "--config", str(cfg), "--scenario", "null", "--out", str(tmp_path)]) == 2
    assert "bogus" in _error(capsys)["message"]


@pytest.mark.parametrize("scenario,lo,hi", [("known_savings_8pct", -10.0, -6.0), ("null", -1.0, 1.0)])
def test_pipeline_effect(tmp_path, scenario, lo, hi):
    assert main(["pipeline", "--scenario", scenario, "--out", str(tmp_path)]) == 0
    summary = json.loads((tmp_path / "season_summary.json").read_text())
    assert summary["schema_version"] == SCHEMA_VERSION
    assert summary["seasons"]
    for season in summary["seasons"].values():
        assert lo <= season["effect_pct"] <= hi
    for name in ("effects.csv", "normalized.csv", "model_pair.json", "validation.json", "diagnose/change_report.json"):
        assert (tmp_path / name).exists()
    assert (tmp_path / "effects.csv").read_text().startswith(f"# schema_version={SCHEMA_VERSION}")


def test_pipeline_json_format(tmp_path):
    assert main(["pipeline", "--scenario", "null", "--format", "json", "--out", str(tmp_path)]) == 0
    rows = json.loads((tmp_path / "effects.json").read_text())["rows"]
    assert len(rows) % 365 == 0 and {"date", "effect_ic", "solar", "other"} <= set(rows[0])


def test_portfolio_directory(sim_dir, tmp_path):
    fleet = tmp_path / "fleet"
    fleet.mkdir()
    series = read_telemetry_csv(sim_dir / "telemetry.csv")
    write_telemetry_csv(series, fleet / "a.csv")
    write_telemetry_csv(series.between("2019-01-01", "2019-01-05"), fleet / "b.csv")
    code = main(["calibrate", "--input", str(fleet), "--out", str(tmp_path / "out")])
    status = json.loads((tmp_path / "out" / "portfolio.json").read_text())["buildings"]
    assert status["a"]["exit_code"] == 0
    assert status["b"]["exit_code"] != 0 and code == status["b"]["exit_code"]
