"""Acceptance criteria, one test each; every test prints a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` or as part of the full suite.
"""

import filecmp
import time
import warnings

import numpy as np
import pandas as pd
import pytest

from heateff.cli import main
from heateff.control_effect import calibrate_pair, counterfactual_series, decompose, season_summary
from heateff.core import SeasonPolicy
from heateff.diagnostics import diagnose
from heateff.effects import effect_supply_space, effect_supply_total, energy_weighted_effect, track_model_based
from heateff.gam import calibrate, fit_gam
from heateff.normalization import (
    HddNormalizationConfig,
    ReferenceWeather,
    SpaceHeatingModel,
    normalize_hdd,
    normalize_hdd_monthly,
    normalize_ratio_space,
    normalize_ratio_total,
)
from heateff.power_models import LinearWeatherModel, SupplyTempModel
from heateff.psychrometrics import replacement_air_rh
from heateff.simulate import simulate, standard_scenarios

from test_gam import oracle_mean, random_instance


@pytest.fixture
def verdict(capsys):
    """Print one PASS/FAIL line for a criterion, then assert it."""

    def report(number: int, ok: bool, detail: str) -> None:
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'} criterion {number:2d}: {detail}")
        assert ok, detail

    return report


def _quiet(fn, *args, **kwargs):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return fn(*args, **kwargs)


def test_01_posterior_matches_augmented_least_squares(verdict, rng):
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(25):
        design, y, prior = random_instance(rng, anchor=i % 3 == 0)
        got = calibrate(design, y, prior).theta_mean
        want = oracle_mean(design, y, prior)
        worst = max(worst, np.linalg.norm(got - want) / np.linalg.norm(want))
    elapsed = time.perf_counter() - t0
    verdict(1, worst <= 1e-8 and elapsed < 1.0,
            f"25 random instances, max relative error {worst:.1e}, {elapsed:.2f} s")


def test_02_noiseless_parameter_recovery(verdict):
    spec = standard_scenarios()["known_savings_8pct"]
    spec = spec.replace(noise_std=0.0, noise_rel=0.0, t_in_noise=0.0, rh_noise=0.0)
    series, truth = simulate(spec)
    f = truth.frame
    data = series.subset((f["post"] & f["heating_on"] & ~f["clipped"]).to_numpy())
    lin = LinearWeatherModel(t_base="measured").fit(data.frame, data["q_tot"])
    sup = SupplyTempModel().fit(data.frame, data["q_tot"])
    errors = {
        "b": abs(lin.b_ / spec.b - 1),
        "c": abs(lin.c_ / spec.c - 1),
        "q0": abs(lin.q0_ / (spec.dhw - spec.internal_gains) - 1),
        "k": abs(sup.k_ / f["k"].iloc[-1] - 1),
        "q_dhw": abs(sup.q_dhw_ / spec.dhw - 1),
    }
    worst = max(errors.values())
    verdict(2, worst <= 1e-6, f"max relative parameter error {worst:.1e} over {sorted(errors)}")


def test_03_normalization_identities(verdict):
    series, _ = simulate(standard_scenarios()["null"])
    year = series.between("2018-07-01", "2019-06-30")
    ref = ReferenceWeather.from_series(year)
    model = fit_gam(year)
    total = normalize_ratio_total(model, year, ref)
    space = normalize_ratio_space(SpaceHeatingModel(model, 4.0), year, ref, 4.0)
    monthly = normalize_hdd_monthly(year, ref, HddNormalizationConfig())
    checks = {
        "ratio_total": bool((total.loc[~total["flagged"], "q_ref"] == total.loc[~total["flagged"], "q_obs"]).all()),
        "ratio_space": bool((space.loc[~space["flagged"], "q_ref"] == space.loc[~space["flagged"], "q_obs"]).all()),
        "hdd_monthly": bool((monthly.loc[monthly["flag"] == "", "e_ref"] == monthly.loc[monthly["flag"] == "", "e_obs"]).all()),
        "worked_example": normalize_hdd(10_000.0, 500.0, 600.0, 2_000.0) == 11_600.0,
    }
    verdict(3, all(checks.values()), f"identities and 11600 example: {checks}")


def test_04_known_savings_recovered(verdict):
    t0 = time.perf_counter()
    spec = standard_scenarios()["known_savings_8pct"]
    series, truth = simulate(spec)
    w = spec.windows()
    pair = _quiet(calibrate_pair, series, w)
    effect = counterfactual_series(pair, series.between(w.post_start, w.post_end))
    (season,) = season_summary(effect).values()
    elapsed = time.perf_counter() - t0
    est = season["effect_pct"]
    verdict(4, abs(est + 8.0) <= 2.0 and elapsed < 10.0,
            f"estimated {est:.2f}% vs -8% (truth {100 * truth.relative_effect(w.post_start, w.post_end):.2f}%), "
            f"{elapsed:.2f} s")


def test_05_isolation_survives_ventilation_step(verdict):
    spec = standard_scenarios()["ventilation_step"]
    series, truth = simulate(spec)
    w = spec.windows()
    pair = _quiet(calibrate_pair, series, w)
    post = series.between(w.post_start, spec.end)
    seasons = season_summary(counterfactual_series(pair, post))
    before = seasons["2020-21"]["effect_pct"]
    after = seasons["2021-22"]["effect_pct"]
    tracked = _quiet(track_model_based, pair.m_ref, post)
    shift = energy_weighted_effect(tracked, "2021-07-01", "2022-06-30") - energy_weighted_effect(
        tracked, "2020-07-01", "2021-06-30")
    f = truth.frame.loc["2021-07-01":"2022-06-30"]
    step = 100 * f["event_delta"].sum() / (f["q_true"] - f["event_delta"]).sum()
    ok = abs(after - before) <= 1.0 and shift >= 0.75 * step
    verdict(5, ok, f"isolated effect {before:.2f}% -> {after:.2f}%, tracking shift {shift:.2f} pp "
                   f"vs step {step:.2f} pp")


def test_06_decomposition_closes(verdict):
    worst, names = 0.0, []
    for name, spec in standard_scenarios().items():
        if spec.controller_post is None:
            continue
        series, truth = simulate(spec)
        w = spec.windows()
        pair = _quiet(calibrate_pair, series, w)
        dec = decompose(pair, series.between(w.post_start, w.post_end), setback_schedule=truth.setbacks or None)
        parts = [c for c in ("solar", "setback") if c in dec] + ["other"]
        worst = max(worst, float(np.max(np.abs(dec[parts].sum(axis=1) - dec["effect_ic"]))))
        names.append(name)
    verdict(6, worst <= 1e-9 and len(names) >= 6, f"max closure error {worst:.1e} kW over {len(names)} scenarios")


def test_07_sunny_shares(verdict):
    spec = standard_scenarios()["sunny_season"]
    series, truth = simulate(spec)
    w = spec.windows()
    pair = _quiet(calibrate_pair, series, w)
    dec = decompose(pair, series.between(w.post_start, w.post_end), setback_schedule=truth.setbacks)
    policy = SeasonPolicy()
    (season,) = season_summary(dec, season_policy=policy).values()
    days = dec.index[policy.keep(dec.index, dec["t_out"].to_numpy())]
    want = truth.component_shares(days=days)
    gaps = {c: season["components"][c]["share_of_effect_pct"] - 100 * want[c] for c in ("solar", "setback")}
    verdict(7, all(abs(g) <= 5.0 for g in gaps.values()),
            "share error (pp) " + ", ".join(f"{c} {g:+.1f}" for c, g in gaps.items()))


def test_08_supply_temperature_effects(verdict):
    space = effect_supply_space(46.0, 51.0, 21.0)
    m = SupplyTempModel(t_in=21.0)
    m.k_, m.q_dhw_, m.t_in_, m.per_day_t_in_ = 2.0, 1e-9, 21.0, False
    rng = np.random.default_rng(8)
    obs, hc, t_in = rng.uniform(30, 50, 100), rng.uniform(40, 60, 100), rng.uniform(19, 23, 100)
    gap = float(np.max(np.abs(effect_supply_total(m, obs, hc, t_in) - effect_supply_space(obs, hc, t_in))))
    verdict(8, space == -1 / 6 and gap <= 1e-6, f"space effect {space!r}, max total-space gap at tiny DHW {gap:.1e}")


def test_09_replacement_humidity(verdict):
    t, rh = np.meshgrid(np.linspace(-30, 30, 10), np.linspace(0, 100, 10))
    identity = bool(np.all(replacement_air_rh(t.ravel(), rh.ravel(), t.ravel()) == rh.ravel()))
    rh_sweep = replacement_air_rh(np.full(101, -5.0), np.linspace(0, 100, 101), np.full(101, 21.0))
    tin_sweep = replacement_air_rh(np.full(101, -5.0), np.full(101, 80.0), np.linspace(15, 25, 101))
    increasing = bool(np.all(np.diff(rh_sweep) > 0))
    decreasing = bool(np.all(np.diff(tin_sweep) < 0))
    verdict(9, identity and increasing and decreasing,
            f"identity on 100 points {identity}, increasing in outdoor RH {increasing}, "
            f"decreasing in indoor temperature {decreasing}")


def test_10_change_detection(verdict):
    expected = {"ventilation_step": "2021-07-01", "dhw_step": "2021-01-15", "system_change": "2021-01-15"}
    catalog = standard_scenarios()
    found = {}
    for name, when in expected.items():
        spec = catalog[name]
        series, _ = simulate(spec)
        changes = diagnose(series, activation=spec.activation).report.changes
        found[name] = any(abs((pd.Timestamp(c.date) - pd.Timestamp(when)).days) <= 14 for c in changes)
    null = catalog["null"]
    false_pos = 0
    for seed in range(1000, 1100):
        spec = null.replace(seed=seed)
        series, _ = simulate(spec)
        false_pos += not diagnose(series, activation=spec.activation).report.empty
    verdict(10, all(found.values()) and false_pos <= 5,
            f"detected within 14 days {found}, null false positives {false_pos}/100")


def test_11_pipeline_is_deterministic(verdict, tmp_path):
    runs = [tmp_path / "a", tmp_path / "b"]
    codes = [main(["pipeline", "--scenario", "sunny_season", "--out", str(d)]) for d in runs]
    files = sorted(p.relative_to(runs[0]) for p in runs[0].rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(runs[0], runs[1], [str(p) for p in files], shallow=False)
    verdict(11, codes == [0, 0] and files and not mismatch and not errors,
            f"{len(files)} output files, {len(mismatch) + len(errors)} differ")
