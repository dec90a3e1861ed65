import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

from jointwg.dist import (
    WGParams,
    cdf,
    hazard,
    logpdf,
    logsf,
    pdf,
    quantile,
    sample,
    standardize,
    survival,
)

positive = st.floats(min_value=0.2, max_value=20.0)
params_st = st.builds(WGParams, positive, positive, positive)


class TestParams:
    @pytest.mark.parametrize("bad", [0.0, -1.0, np.inf, np.nan])
    def test_rejects_nonpositive(self, bad):
        with pytest.raises(ValueError):
            WGParams(bad, 1.0, 1.0)
        with pytest.raises(ValueError):
            WGParams(1.0, 1.0, bad)

    def test_fields_are_floats(self):
        p = WGParams(2, 3, 4)
        assert p.as_tuple() == (2.0, 3.0, 4.0)
        assert all(isinstance(v, float) for v in p.as_tuple())


class TestDensity:
    def test_unit_parameters_at_one(self):
        # WG(1,1,1): f(1) = 1 * 2^-2, S(1) = 1/2
        p = WGParams(1, 1, 1)
        assert pdf(p, 1.0) == pytest.approx(0.25, rel=1e-14)
        assert survival(p, 1.0) == pytest.approx(0.5, rel=1e-14)
        assert hazard(p, 1.0) == pytest.approx(0.5, rel=1e-14)

    @pytest.mark.parametrize(
        "p", [WGParams(6, 3, 4), WGParams(2, 5, 1.5), WGParams(41.9214, 16.3688, 0.017), WGParams(1, 0.7, 2)]
    )
    def test_normalization(self, p):
        # split at the median so quad sees the bulk of the mass on both pieces
        med = quantile(p, 0.5)
        left, _ = quad(lambda x: pdf(p, x), 0, med, limit=200, epsabs=1e-13)
        right, _ = quad(lambda x: pdf(p, x), med, np.inf, limit=200, epsabs=1e-13)
        assert left + right == pytest.approx(1.0, abs=1e-6)

    def test_density_is_derivative_of_cdf(self):
        p = WGParams(6, 3, 4)
        x = np.linspace(0.5, 12, 15)
        h = 1e-6
        fd = (cdf(p, x + h) - cdf(p, x - h)) / (2 * h)
        np.testing.assert_allclose(pdf(p, x), fd, rtol=1e-6)

    def test_origin_conventions(self):
        assert pdf(WGParams(2, 3, 1), 0.0) == 0.0
        assert pdf(WGParams(2, 1, 3), 0.0) == pytest.approx(1.5)
        with pytest.raises(ValueError):
            pdf(WGParams(2, 0.5, 3), 0.0)

    def test_negative_argument_rejected(self):
        with pytest.raises(ValueError):
            logpdf(WGParams(1, 1, 1), -1.0)
        with pytest.raises(ValueError):
            survival(WGParams(1, 1, 1), np.array([1.0, -0.1]))

    def test_no_overflow_far_in_the_tail(self):
        p = WGParams(1, 20, 3)
        assert logsf(p, 1e30) == pytest.approx(-3 * 20 * math.log(1e30), rel=1e-12)
        assert np.isfinite(logpdf(p, 1e30))

    def test_small_cdf_keeps_precision(self):
        p = WGParams(1, 2, 1)
        # F(x) = 1 - 1/(1+x^2) = x^2/(1+x^2)
        assert cdf(p, 1e-10) == pytest.approx(1e-20, rel=1e-10)

    def test_vectorized_shape(self):
        p = WGParams(1, 2, 3)
        x = np.linspace(0.1, 3, 7)
        assert pdf(p, x).shape == (7,)
        assert isinstance(pdf(p, 1.0), float)


class TestQuantile:
    @settings(max_examples=200, deadline=None)
    @given(params_st, st.floats(min_value=1e-6, max_value=1 - 1e-6))
    def test_cdf_of_quantile(self, p, u):
        assert cdf(p, quantile(p, u)) == pytest.approx(u, abs=1e-12)

    @settings(max_examples=200, deadline=None)
    @given(params_st, st.floats(min_value=1e-3, max_value=1e3))
    def test_quantile_of_cdf(self, p, x):
        u = cdf(p, x)
        if 1e-12 < u < 1 - 1e-9:
            assert quantile(p, u) == pytest.approx(x, rel=1e-6)

    def test_zero_and_domain(self):
        p = WGParams(2, 3, 4)
        assert quantile(p, 0.0) == 0.0
        for bad in (1.0, -0.1, np.nan):
            with pytest.raises(ValueError):
                quantile(p, bad)

    def test_closed_form(self):
        p = WGParams(2, 3, 4)
        u = 0.3
        expected = 2 * ((1 - u) ** (-1 / 4) - 1) ** (1 / 3)
        assert quantile(p, u) == pytest.approx(expected, rel=1e-14)


class TestSampling:
    def test_reproducible(self):
        p = WGParams(6, 3, 4)
        a = sample(p, 50, np.random.default_rng(7))
        b = sample(p, 50, np.random.default_rng(7))
        np.testing.assert_array_equal(a, b)

    def test_matches_law(self):
        from scipy.stats import kstest

        p = WGParams(2, 5, 1.5)
        x = sample(p, 20000, np.random.default_rng(3))
        assert kstest(x, lambda t: cdf(p, t)).pvalue > 1e-3

    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            sample(WGParams(1, 1, 1), 0, np.random.default_rng(0))


class TestStandardize:
    @settings(max_examples=200, deadline=None)
    @given(params_st, st.floats(min_value=1e-3, max_value=1e3))
    def test_survival_identity(self, p, t):
        y = standardize(p, t)
        lhs = survival(p, t)
        rhs = survival(WGParams(1, 1, p.beta), y)
        assert abs(lhs - rhs) <= 1e-14

    def test_standardized_law_is_unit_scale(self):
        p = WGParams(6, 3, 4)
        y = standardize(p, sample(p, 20000, np.random.default_rng(11)))
        from scipy.stats import kstest

        assert kstest(y, lambda v: cdf(WGParams(1, 1, 4), v)).pvalue > 1e-3
