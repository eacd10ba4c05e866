import warnings

import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heateff.core import DailySeries, HeatingCurve
from heateff.effects import (
    TrackingWarning,
    effect_supply_space,
    effect_supply_total,
    energy_weighted_effect,
    simulate_heating_curve,
    track_model_based,
)
from heateff.gam import fit_gam
from heateff.power_models import SupplyTempModel, predict_supply_power


def _supply_model(k=2.0, q_dhw=5.0, t_in=21.0):
    m = SupplyTempModel(t_in=t_in)
    m.k_, m.q_dhw_, m.t_in_, m.per_day_t_in_ = k, q_dhw, t_in, False
    return m


class ScaledModel:
    def __init__(self, base, factor):
        self.base, self.factor = base, factor

    def predict(self, X):
        return self.factor * np.asarray(self.base.predict(X))


class TestTracking:
    @pytest.fixture(scope="class")
    @classmethod
    def baseline(cls):
        from heateff.simulate import simulate, standard_scenarios

        series, _ = simulate(standard_scenarios()["null"])
        year = series.between("2018-07-01", "2019-06-30")
        return series, year, fit_gam(year)

    def test_self_generated_series(self, baseline, rng):
        series, _, model = baseline
        nxt = series.between("2019-07-01", "2020-06-30")
        q = model.predict(nxt.frame) + rng.normal(0, 0.5, len(nxt))
        tr = track_model_based(model, nxt.with_columns(q_tot=q))
        good = ~tr["flagged"]
        rel = (tr.loc[good, "q_obs"] - tr.loc[good, "q_baseline"]).mean() / tr.loc[good, "q_baseline"].mean()
        assert abs(rel) <= 2 * 0.5 / np.sqrt(good.sum()) / tr.loc[good, "q_baseline"].mean() + 1e-12

    def test_ten_percent_exact(self, baseline):
        series, _, model = baseline
        nxt = series.between("2019-07-01", "2020-06-30")
        q = 1.1 * model.predict(nxt.frame)
        tr = track_model_based(model, nxt.with_columns(q_tot=q))
        good = ~tr["flagged"]
        np.testing.assert_allclose(tr.loc[good, "effect_pct"], 10.0, rtol=1e-12)
        assert energy_weighted_effect(tr) == pytest.approx(10.0, rel=1e-12)

    def test_own_training_window_is_unbiased(self, baseline):
        _, year, model = baseline
        with pytest.warns(TrackingWarning):
            tr = track_model_based(model, year)
        good = ~tr["flagged"]
        q = tr.loc[good, "q_obs"]
        resid = q - tr.loc[good, "q_baseline"]
        bound = 2 * (resid.std() / np.sqrt(len(q))) / q.mean()
        assert abs(resid.mean() / q.mean()) <= bound

    def test_rolling_and_window_ids(self, baseline):
        series, _, model = baseline
        nxt = series.between("2019-07-01", "2019-09-28")
        tr = track_model_based(model, nxt, window=30)
        assert tr["window_id"].tolist() == [i // 30 for i in range(len(nxt))]
        last = tr.iloc[-30:]
        last = last[~last["flagged"]]
        want = 100 * (last["q_obs"].sum() - last["q_baseline"].sum()) / last["q_baseline"].sum()
        assert tr["rolling_effect_pct"].iloc[-1] == pytest.approx(want, rel=1e-9)

    def test_missing_inputs_flagged(self, baseline):
        series, _, model = baseline
        nxt = series.between("2019-07-01", "2019-07-10")
        t_out = nxt["t_out"]
        t_out[3] = np.nan
        tr = track_model_based(model, nxt.with_columns(t_out=t_out))
        assert tr["flagged"].iloc[3]
        assert np.isnan(tr["effect_pct"].iloc[3])

    def test_ventilation_step_shift(self, scenario, model_pair):
        spec, series, truth = scenario("ventilation_step")
        pair = model_pair("ventilation_step")
        w = spec.windows()
        tr = track_model_based(pair.m_ref, series.between(w.post_start, spec.end))
        before = energy_weighted_effect(tr, "2020-07-01", "2021-06-30")
        after = energy_weighted_effect(tr, "2021-07-01", "2022-06-30")
        f = truth.frame.loc["2021-07-01":"2022-06-30"]
        step = 100 * f["event_delta"].sum() / (f["q_true"] - f["event_delta"]).sum()
        assert abs((after - before) - step) <= 2.0


class TestSupplyEffects:
    def test_total_zero_when_equal(self):
        assert effect_supply_total(_supply_model(), 50.0, 50.0, 21.0) == 0.0

    def test_total_arithmetic(self):
        assert effect_supply_total(_supply_model(), 46.0, 51.0, 21.0) == pytest.approx(-10 / 65, rel=1e-15)

    def test_total_matches_power_levels(self, rng):
        m = _supply_model(1.4, 3.0)
        obs, hc, t_in = rng.uniform(30, 50, 20), rng.uniform(40, 60, 20), rng.uniform(19, 23, 20)
        q_obs = predict_supply_power(m, obs, t_in)
        q_hc = predict_supply_power(m, hc, t_in)
        np.testing.assert_allclose(effect_supply_total(m, obs, hc, t_in), (q_obs - q_hc) / q_hc, rtol=1e-12)

    def test_space_zero_when_equal(self):
        assert effect_supply_space(40.0, 40.0, 21.0) == 0.0

    def test_space_arithmetic(self):
        assert effect_supply_space(46.0, 51.0, 21.0) == -1 / 6

    def test_space_is_total_without_dhw(self, rng):
        obs, hc, t_in = rng.uniform(30, 50, 50), rng.uniform(40, 60, 50), rng.uniform(19, 23, 50)
        total = effect_supply_total(_supply_model(2.0, 1e-9), obs, hc, t_in)
        np.testing.assert_allclose(total, effect_supply_space(obs, hc, t_in), rtol=0, atol=1e-6)

    def test_flags_degenerate_days(self):
        eff, flags = effect_supply_space([40.0, 40.0], [21.2, 50.0], [21.0, 21.0], return_flags=True)
        assert flags.tolist() == [True, False]
        assert np.isnan(eff[0])
        eff, flags = effect_supply_total(_supply_model(), 30.0, 20.0, 21.0, return_flags=True)
        assert flags and np.isnan(eff)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(20, 80), st.floats(25, 80), st.floats(15, 24), st.floats(1e-3, 1e3))
    def test_relative_effects_ignore_power_units(self, obs, hc, t_in, scale):
        # rescaling power (kW -> W, MW, ...) rescales k and q_dhw together
        base = effect_supply_total(_supply_model(2.0, 5.0), obs, hc, t_in)
        scaled = effect_supply_total(_supply_model(2.0 * scale, 5.0 * scale), obs, hc, t_in)
        if np.isnan(base):
            assert np.isnan(scaled)
        else:
            assert scaled == pytest.approx(base, rel=1e-12, abs=1e-15)

    @settings(max_examples=60, deadline=None)
    @given(st.floats(20, 80), st.floats(25, 80), st.floats(15, 24), st.floats(0.1, 5), st.floats(0, 20))
    def test_total_sign(self, obs, hc, t_in, k, q_dhw):
        e = effect_supply_total(_supply_model(k, q_dhw), obs, hc, t_in)
        if hc > t_in:
            assert np.sign(e) == np.sign(obs - hc)


class TestHeatingCurveSimulation:
    curve = HeatingCurve(((-25.0, 75.0), (0.0, 50.0), (18.0, 25.0)))

    def test_breakpoint(self):
        assert simulate_heating_curve(self.curve, [0.0])[0] == 50.0

    def test_clamp_below(self):
        assert simulate_heating_curve(self.curve, [-40.0])[0] == 75.0

    def test_midpoint(self):
        assert simulate_heating_curve(self.curve, [9.0])[0] == 37.5
