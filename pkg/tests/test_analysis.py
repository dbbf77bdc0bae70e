import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from znqed.analysis import (
    MODELS, SingularFitError, curve_fit, find_peaks, finite_size_extrapolation,
    first_order_period, linear_fit, oscillation_period, rate_from_series, schwinger_rate,
)
from znqed.errors import DomainError, NotEstimable

from conftest import G_PAPER

LORENTZ = dict(m0=-0.493, A=0.695, gamma=1.594, c=0.00435)


def test_sine_has_one_peak():
    t = np.linspace(0, 2 * math.pi, 201)
    peaks = find_peaks(np.sin(t), t)
    assert len(peaks) == 1
    assert peaks[0].t_peak == pytest.approx(math.pi / 2, abs=1e-4)
    assert peaks[0].value == pytest.approx(1.0, abs=1e-3)
    assert peaks[0].value == np.sin(t)[peaks[0].index]


def test_constant_has_no_peaks():
    assert find_peaks(np.full(50, 0.3)) == []


def test_peak_needs_samples():
    with pytest.raises(DomainError):
        find_peaks([1.0, 2.0])


def test_prominence_filters_ripple():
    t = np.linspace(0, 10, 1001)
    y = 1e-4 * np.sin(20 * t)
    assert find_peaks(y, t) == []
    assert len(find_peaks(y, t, min_prominence=1e-5)) > 5


@settings(max_examples=30, deadline=None)
@given(shift=st.floats(-50, 50), w=st.floats(0.5, 4))
def test_peaks_shift_invariant(shift, w):
    t = np.linspace(0, 10, 401)
    y = np.sin(w * t) * np.exp(-0.1 * t)
    base = find_peaks(y, t)
    moved = find_peaks(y + shift, t)
    assert [p.index for p in base] == [p.index for p in moved]
    for a, b in zip(base, moved):
        assert b.t_peak == pytest.approx(a.t_peak, abs=1e-9)
        assert 0 <= a.t_peak <= 10


def test_cos_period():
    w = 2.3
    t = np.arange(0, 10, 0.05)
    # first sample of cos is at the boundary and is not a local maximum
    assert oscillation_period(np.cos(w * t), t) == pytest.approx(2 * math.pi / w, abs=0.05)


def test_period_not_estimable():
    t = np.linspace(0, 1, 50)
    with pytest.raises(NotEstimable):
        oscillation_period(np.sin(t), t)


def test_first_order_period_coefficient():
    # 1/T = 2 m + g^2 / 2, intercept about 0.48 at the default coupling
    assert 1 / first_order_period(0.0, G_PAPER) == pytest.approx(0.477, abs=1e-3)
    assert 1 / first_order_period(1.0, G_PAPER) - 1 / first_order_period(0.0, G_PAPER) == pytest.approx(2.0)


def test_linear_exact():
    x = np.linspace(-3, 7, 11)
    fit = linear_fit(x, 2 * x + 1)
    assert abs(fit["slope"] - 2) < 1e-12 and abs(fit["intercept"] - 1) < 1e-12
    assert fit.rss < 1e-24
    with pytest.raises(SingularFitError):
        linear_fit([1, 1, 1], [0, 1, 2])


@settings(max_examples=40, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), n=st.integers(2, 30))
def test_linear_affine_property(a, b, n):
    x = np.linspace(-1, 2, n)
    fit = linear_fit(x, a * x + b)
    assert fit["slope"] == pytest.approx(a, abs=1e-11)
    assert fit["intercept"] == pytest.approx(b, abs=1e-11)


def test_lorentzian_recovery():
    p = np.array(list(LORENTZ.values()))
    m = np.linspace(-5, 5, 41)
    fit = curve_fit("lorentzian", m, MODELS["lorentzian"].f(m, p))
    assert fit.converged
    for k, v in LORENTZ.items():
        assert abs(fit[k] - v) < 1e-6, k


def test_gaussian_recovery():
    x = np.linspace(-4, 4, 60)
    truth = np.array([0.3, 1.2, 0.8, -0.1])
    fit = curve_fit("gaussian", x, MODELS["gaussian"].f(x, truth))
    assert np.abs(fit.values - truth).max() < 1e-8


def test_reciprocal_linear_recovery():
    m = np.linspace(1, 5, 17)
    fit = curve_fit("reciprocal_linear", m, 1 / (0.26 * m + 0.42))
    assert abs(fit["a"] - 0.26) < 1e-8 and abs(fit["b"] - 0.42) < 1e-8


def test_logarithmic_recovery():
    t = np.linspace(0.5, 4, 30)
    fit = curve_fit("logarithmic", t, 0.7 * np.log(t) + 0.2)
    assert abs(fit["a"] - 0.7) < 1e-10 and abs(fit["b"] - 0.2) < 1e-10
    with pytest.raises(DomainError):
        curve_fit("logarithmic", [0, 1, 2], [0, 1, 2])


def test_unknown_model():
    with pytest.raises(DomainError):
        curve_fit("cubic", [1, 2, 3], [1, 2, 3])


def test_fit_reorder_invariant(rng):
    m = np.linspace(-5, 5, 31)
    y = MODELS["lorentzian"].f(m, np.array(list(LORENTZ.values()))) + 0.01 * rng.normal(size=m.size)
    perm = rng.permutation(m.size)
    a = curve_fit("lorentzian", m, y)
    b = curve_fit("lorentzian", m[perm], y[perm])
    assert np.array_equal(a.values, b.values)
    assert a.rss == b.rss


def test_rss_non_increasing(rng):
    m = np.linspace(-5, 5, 31)
    y = MODELS["lorentzian"].f(m, np.array(list(LORENTZ.values()))) + 0.02 * rng.normal(size=m.size)
    fit = curve_fit("lorentzian", m, y, init=[1.0, 0.3, 3.0, 0.0])
    assert np.all(np.diff(fit.rss_history) <= 1e-15)
    assert fit.stderr["m0"] > 0


def test_iteration_cap_flags_nonconvergence():
    m = np.linspace(-5, 5, 31)
    y = MODELS["lorentzian"].f(m, np.array(list(LORENTZ.values())))
    fit = curve_fit("lorentzian", m, y, init=[3.0, 0.1, 0.5, 0.0], max_iter=2)
    assert not fit.converged and fit.iterations == 2


def test_finite_size_exact():
    Ns = [8, 10, 12, 14, 16, 40]
    ext = finite_size_extrapolation([(N, 0.2175 - 0.1703 / N) for N in Ns])
    assert abs(ext.rho_inf - 0.2175) < 1e-10 and abs(ext.beta - 0.1703) < 1e-10
    rho_inf, beta, errs = ext
    assert errs[0] < 1e-10


def test_finite_size_two_points():
    ext = finite_size_extrapolation([(10, 0.3), (20, 0.4)])
    assert ext.rss < 1e-28
    assert ext.rho_inf - ext.beta / 10 == pytest.approx(0.3)
    with pytest.raises(SingularFitError):
        finite_size_extrapolation([(10, 0.3), (10, 0.31)])


def test_schwinger_value():
    assert schwinger_rate(1.0, 4.5) == pytest.approx(20.25 / (2 * math.pi) * math.exp(-math.pi), rel=1e-14)
    assert abs(schwinger_rate(1.0, 4.5) - 0.1393) < 1e-4


def test_schwinger_monotone_and_limit():
    eps = np.linspace(0.01, 10, 100)
    r = np.array([schwinger_rate(e, 4.5) for e in eps])
    assert np.all(np.diff(r) > 0)
    assert schwinger_rate(0.02, 4.5) < 1e-60
    with pytest.raises(DomainError):
        schwinger_rate(0.0, 1.0)


def test_rate_from_series_window():
    t = np.arange(0, 2.0001, 0.05)
    y = 0.3 * t + 0.01 * t ** 2
    fit = rate_from_series(t, y, (0.2, 1.0))
    assert fit["slope"] == pytest.approx(0.3 + 0.01 * 1.2, abs=1e-12)
    with pytest.raises(DomainError):
        rate_from_series(t, y, (0.5, 3.0))
    with pytest.raises(DomainError):
        rate_from_series(t, y, (1.0, 0.5))
