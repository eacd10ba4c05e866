import numpy as np
import pandas as pd
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from heateff.basis import (
    DEFAULT_F1_KNOTS,
    DEFAULT_F2_KNOTS,
    BasisSpec,
    GamFeatures,
    build_design_matrix,
    make_hinge_basis,
    make_ramp_step_basis,
)
from heateff.exceptions import DataValidationError

from oracles import design_row, hinge_scalar, ramp_step_scalar

F1 = make_hinge_basis()
F2 = make_ramp_step_basis()


def _frame(t_out, phi, t_in=None):
    d = {"t_out": np.asarray(t_out, float), "phi_rad": np.asarray(phi, float)}
    if t_in is not None:
        d["t_in"] = np.asarray(t_in, float)
    return pd.DataFrame(d, index=pd.date_range("2020-01-01", periods=len(d["t_out"]), freq="D"))


class TestHinge:
    def test_zero_at_knot(self):
        b = make_hinge_basis([3.0])
        assert b.evaluate([3.0])[0, 0] == 0.0

    def test_unit_slope(self):
        b = make_hinge_basis([3.0])
        assert b.evaluate([8.0])[0, 0] == 5.0

    def test_grid_matches_scalar_loop(self, rng):
        x = rng.uniform(-10, 60, 200)
        got = F1.evaluate(x)
        want = np.array([[hinge_scalar(v, c) for c in F1.knots] for v in x])
        np.testing.assert_array_equal(got, want)

    @settings(max_examples=50, deadline=None)
    @given(arrays(float, len(DEFAULT_F1_KNOTS), elements=st.floats(-5, 5)))
    def test_combination_continuous_at_knots(self, w):
        for c in F1.knots:
            left = F1.evaluate([np.nextafter(c, -np.inf)]) @ w
            right = F1.evaluate([np.nextafter(c, np.inf)]) @ w
            assert abs(left[0] - right[0]) <= 1e-12


class TestRampStep:
    def test_plateau_below(self):
        assert np.all(F2.evaluate([-60.0]) == 1.0)

    def test_zero_above(self):
        assert np.all(F2.evaluate([40.0]) == 0.0)

    def test_midpoint(self):
        b = make_ramp_step_basis([0.0, 10.0])
        assert b.evaluate([5.0])[0, 0] == 0.5

    def test_grid_matches_scalar_loop(self, rng):
        x = rng.uniform(-30, 30, 200)
        k = F2.knots
        want = np.array([[ramp_step_scalar(v, a, b) for a, b in zip(k[:-1], k[1:])] for v in x])
        np.testing.assert_allclose(F2.evaluate(x), want, rtol=0, atol=1e-15)


class TestBasisSpec:
    def test_refinement_merges_knots(self):
        b = make_hinge_basis([0.0, 10.0], refinement=(0.0, 4.0, 1.0))
        assert b.knots == (0.0, 1.0, 2.0, 3.0, 4.0, 10.0)

    def test_unsorted_knots_rejected(self):
        with pytest.raises(DataValidationError):
            make_hinge_basis([2.0, 1.0])

    def test_ramp_needs_two_knots(self):
        with pytest.raises(DataValidationError):
            make_ramp_step_basis([1.0])

    def test_json_round_trip(self):
        assert BasisSpec.from_dict(F2.to_dict()) == F2

    def test_constant_family(self):
        b = BasisSpec("constant")
        assert b.n_functions == 1
        assert np.all(b.evaluate([1.0, 2.0]) == 1.0)


class TestDesignMatrix:
    def test_zero_radiation_zeroes_f2_block(self):
        d = build_design_matrix(_frame([-5.0], [0.0]), F1, F2, 21.0)
        assert np.all(d.block("f2") == 0.0)

    def test_t_out_at_base_zeroes_f1_block(self):
        d = build_design_matrix(_frame([21.0], [50.0]), F1, F2, 21.0)
        assert np.all(d.block("f1") == 0.0)

    def test_rows_match_term_by_term(self, rng):
        t_out = rng.uniform(-25, 25, 30)
        phi = rng.uniform(0, 300, 30)
        t_in = rng.uniform(18, 24, 30)
        d = build_design_matrix(_frame(t_out, phi, t_in), F1, F2, "measured")
        want = np.array([design_row(a, p, t, F1.knots, F2.knots) for a, p, t in zip(t_out, phi, t_in)])
        np.testing.assert_allclose(d.matrix, want, rtol=0, atol=1e-12)
        theta = rng.normal(size=d.shape[1])
        np.testing.assert_allclose(d.matrix @ theta, want @ theta, rtol=1e-12)

    def test_blocks_partition_columns(self):
        d = build_design_matrix(_frame([0.0], [0.0], [20.0]), F1, F2, 21.0, include_storage=False)
        assert d.blocks["f1"] == slice(0, F1.n_functions)
        assert d.blocks["intercept"].stop == d.shape[1]

    def test_storage_column(self):
        d = build_design_matrix(_frame([0.0, 0.0, 0.0], [0.0] * 3, [20.0, 21.0, 23.0]), F1, F2, 21.0,
                                include_storage=True)
        np.testing.assert_array_equal(d.block("storage")[:, 0], [1.0, 1.5, 2.0])

    def test_measured_needs_t_in(self):
        with pytest.raises(DataValidationError):
            build_design_matrix(_frame([0.0], [0.0]), F1, F2, "measured")

    @settings(max_examples=30, deadline=None)
    @given(st.integers(1, 15), st.integers(1, 15), st.integers(0, 2**31 - 1))
    def test_linear_in_rows(self, n1, n2, seed):
        r = np.random.default_rng(seed)
        a = _frame(r.uniform(-30, 30, n1), r.uniform(0, 300, n1), r.uniform(18, 24, n1))
        b = _frame(r.uniform(-30, 30, n2), r.uniform(0, 300, n2), r.uniform(18, 24, n2))
        whole = build_design_matrix(pd.concat([a, b], ignore_index=True), F1, F2, "measured").matrix
        parts = np.vstack([build_design_matrix(x, F1, F2, "measured").matrix for x in (a, b)])
        np.testing.assert_array_equal(whole, parts)

    def test_zero_demand_region_gives_intercept(self, rng):
        # t_out above every f2 knot and dT below every f1 knot: only the intercept is active
        d = build_design_matrix(_frame([DEFAULT_F2_KNOTS[-1] + 5.0], [250.0]), F1, F2, 21.0)
        theta = rng.normal(size=d.shape[1])
        assert (d.matrix @ theta)[0] == theta[-1]


def test_gam_features_transformer():
    X = _frame([-5.0, 0.0], [10.0, 20.0])
    tr = GamFeatures().fit(X)
    Z = tr.transform(X)
    assert Z.shape == (2, tr.n_features_out_)
    assert tr.get_params()["t_base"] == 21.0
