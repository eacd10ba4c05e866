import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heateff.exceptions import DataValidationError
from heateff.psychrometrics import replacement_air_rh, saturation_vapor_pressure

from oracles import SATURATION_TABLE_HPA

temps = st.floats(-60, 60, allow_nan=False)
rhs = st.floats(0, 100, allow_nan=False)


def test_magnus_against_table():
    for t, e in SATURATION_TABLE_HPA.items():
        assert saturation_vapor_pressure(t) == pytest.approx(e, rel=5e-3)


def test_equal_temperatures_return_rh():
    assert replacement_air_rh(5.0, 63.0, 5.0) == 63.0


def test_dry_air():
    assert replacement_air_rh(-10.0, 0.0, 21.0) == 0.0


def test_winter_example_against_table():
    want = 80.0 * SATURATION_TABLE_HPA[0] / SATURATION_TABLE_HPA[21]
    assert replacement_air_rh(0.0, 80.0, 21.0) == pytest.approx(want, rel=5e-3)


def test_clipped_at_saturation():
    assert replacement_air_rh(25.0, 90.0, 5.0) == 100.0


@pytest.mark.parametrize("args", [(-70.0, 50.0, 21.0), (0.0, 101.0, 21.0), (0.0, 50.0, np.nan)])
def test_out_of_range(args):
    with pytest.raises(DataValidationError):
        replacement_air_rh(*args)


@settings(max_examples=200, deadline=None)
@given(temps, rhs)
def test_identity_property(t, rh):
    assert replacement_air_rh(t, rh, t) == rh


@settings(max_examples=200, deadline=None)
@given(temps, rhs, rhs, temps)
def test_increasing_in_outdoor_rh(t_out, a, b, t_in):
    lo, hi = sorted((a, b))
    assert replacement_air_rh(t_out, lo, t_in) <= replacement_air_rh(t_out, hi, t_in)


@settings(max_examples=200, deadline=None)
@given(temps, rhs, temps, temps)
def test_decreasing_in_indoor_temperature(t_out, rh, a, b):
    lo, hi = sorted((a, b))
    assert replacement_air_rh(t_out, rh, hi) <= replacement_air_rh(t_out, rh, lo)


def test_vectorized(rng):
    t_out = rng.uniform(-30, 30, 50)
    rh = rng.uniform(0, 100, 50)
    t_in = rng.uniform(15, 25, 50)
    out = replacement_air_rh(t_out, rh, t_in)
    scalar = [replacement_air_rh(a, b, c) for a, b, c in zip(t_out, rh, t_in)]
    np.testing.assert_allclose(out, scalar, rtol=1e-15)
    assert np.all((out >= 0) & (out <= 100))
