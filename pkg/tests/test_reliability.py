import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jointwg.dist import WGParams, standardize, survival
from jointwg.reliability import rank_lines, reliability_curve, standardized_reliability

betas_st = st.lists(st.floats(min_value=1e-3, max_value=50.0), min_size=1, max_size=6)
times_st = st.floats(min_value=1e-6, max_value=1e6)


class TestStandardizedReliability:
    def test_trivial_values(self):
        assert standardized_reliability(3.7, 0.0) == 1.0
        assert standardized_reliability(1.0, 1.0) == pytest.approx(0.5, rel=1e-15)

    def test_published_simulated_betas(self):
        assert standardized_reliability(0.0297, 1.0) == pytest.approx(0.9796, abs=5e-5)
        assert standardized_reliability(5.735, 1.0) == pytest.approx(0.0188, abs=5e-5)

    def test_domain(self):
        with pytest.raises(ValueError):
            standardized_reliability(0.0, 1.0)
        with pytest.raises(ValueError):
            standardized_reliability(1.0, -1.0)

    def test_strictly_decreasing(self):
        t = np.linspace(0.01, 10, 50)
        assert np.all(np.diff(standardized_reliability(2.0, t)) < 0)
        b = np.linspace(0.1, 5, 50)
        assert np.all(np.diff(standardized_reliability(b, 1.0)) < 0)

    @settings(max_examples=200, deadline=None)
    @given(
        st.floats(min_value=0.2, max_value=20.0),
        st.floats(min_value=0.2, max_value=20.0),
        st.floats(min_value=1e-3, max_value=20.0),
        st.floats(min_value=1e-3, max_value=1e3),
    )
    def test_matches_raw_survival(self, alpha, theta, beta, t):
        p = WGParams(alpha, theta, beta)
        assert abs(standardized_reliability(beta, standardize(p, t)) - survival(p, t)) <= 1e-14


class TestRankLines:
    def test_published_simulated_order(self):
        for t in (1e-3, 1.0, 1e3):
            assert rank_lines([5.735, 0.0297], t).order == (2, 1)

    def test_three_lines(self):
        r = rank_lines([1.0, 2.0, 3.0], 1.0)
        assert r.order == (1, 2, 3)
        assert r.reliabilities == pytest.approx((0.5, 0.25, 0.125), rel=1e-15)

    def test_ties_by_index(self):
        r = rank_lines([2.0, 1.0, 2.0, 1.0], 0.5)
        assert r.order == (2, 4, 1, 3)

    def test_underflow_does_not_tie(self):
        # both reliabilities underflow to 0, the log comparison still orders them
        r = rank_lines([2000.0, 1000.0], 1e200)
        assert r.reliabilities == (0.0, 0.0)
        assert r.order == (2, 1)

    @settings(max_examples=200, deadline=None)
    @given(betas_st, times_st, times_st)
    def test_order_is_time_free(self, betas, t1, t2):
        assert rank_lines(betas, t1).order == rank_lines(betas, t2).order

    def test_accepts_params_and_fits(self):
        params = [WGParams(1, 1, 3.0), WGParams(5, 2, 0.5)]
        assert rank_lines(params, 1.0).order == (2, 1)

        class Fit:
            estimates = params

        assert rank_lines(Fit(), 1.0).order == (2, 1)

    def test_raw_mode_can_reorder(self):
        # same beta, different scales: raw reliability favours the larger alpha
        params = [WGParams(1, 2, 1.0), WGParams(10, 2, 1.0)]
        assert rank_lines(params, 1.0, mode="standardized").order == (1, 2)
        raw = rank_lines(params, 1.0, mode="raw")
        assert raw.order == (2, 1)
        assert raw.reliabilities[0] == pytest.approx(survival(params[0], 1.0))

    def test_raw_mode_needs_params(self):
        with pytest.raises(ValueError):
            rank_lines([1.0, 2.0], 1.0, mode="raw")
        with pytest.raises(ValueError):
            rank_lines([1.0], 1.0, mode="sideways")


class TestCurve:
    def test_origin(self):
        assert reliability_curve(2.0, [0.0]) == [(0.0, 1.0)]

    def test_closed_form(self):
        grid = np.linspace(0, 20, 41)
        for t, v in reliability_curve(1.5, grid):
            assert v == pytest.approx((1 + t) ** -1.5, rel=1e-14)

    def test_larger_beta_lies_below(self):
        grid = np.linspace(0.01, 10, 100)
        hi = np.array([v for _, v in reliability_curve(4.0, grid)])
        lo = np.array([v for _, v in reliability_curve(1.5, grid)])
        assert np.all(hi < lo)

    def test_grid_checks(self):
        with pytest.raises(ValueError):
            reliability_curve(1.0, [1.0, 0.5])
        with pytest.raises(ValueError):
            reliability_curve(1.0, [[1.0]])
