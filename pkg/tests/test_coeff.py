import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apfronts.coeff import (CoefficientField, Grid1D, TrigPoly, ap_diagnostic, bohr_mean,
                            bohr_mean_samples, eval_coefficients, sample_ap_diagnostic,
                            spread_offsets, wrap_length)
from apfronts.errors import ArgumentError, RangeError

from conftest import SQ2, periodic_a_field, quasi_field


def test_eval_quasi_example(qp):
    a, ap, c = eval_coefficients(qp, np.array([0.0, math.pi]))
    assert np.allclose(a, 1.0) and np.allclose(ap, 0.0)
    assert c[0] == pytest.approx(1.2, abs=1e-12)
    assert c[1] == pytest.approx(1.0 + 0.1 * (-1.0 + math.cos(SQ2 * math.pi)), abs=1e-12)


def test_periodic_field_is_exactly_periodic(per):
    x = np.linspace(-3, 3, 101)
    assert np.allclose(per.c(x + 1.0), per.c(x), atol=1e-12)
    assert per.c(0.25) == pytest.approx(1.5)


def test_a_prime_matches_finite_differences():
    f = periodic_a_field()
    x = np.linspace(0, 2, 41)
    for h in (1e-2, 5e-3):
        fd = (f.a(x + h) - f.a(x - h)) / (2 * h)
        err = np.max(np.abs(fd - f.a_prime(x)))
        assert err < 0.3 * (2 * math.pi) ** 3 * h * h
    assert np.max(np.abs(f.a_half(x, 0.1) - f.a(x[:-1] + 0.05))) < 1e-14


def test_bounds_and_validation():
    assert quasi_field().c_bounds() == pytest.approx((0.8, 1.2), abs=1e-3)
    with pytest.raises(ArgumentError):
        CoefficientField.constant(a=0.0)
    with pytest.raises(ArgumentError):
        CoefficientField.quasiperiodic([1.0], c_mean=0.5, c_amps=[0.6])
    with pytest.raises(ArgumentError):
        # frequency not a harmonic of the declared period
        CoefficientField.from_dict({"kind": "periodic", "period": 1.0,
                                    "c": {"mean": 1.0, "terms": [[0.1, 3.0]]}})


def test_tabulated_out_of_range():
    x = np.linspace(0, 10, 101)
    f = CoefficientField.tabulated(x, np.ones_like(x), 1.0 + 0.1 * np.sin(x))
    assert f.c(5.0) == pytest.approx(1.0 + 0.1 * math.sin(5.0), abs=1e-3)
    with pytest.raises(RangeError):
        f.c(11.0)


@pytest.mark.parametrize("field", ["per", "qp", "const"])
def test_json_round_trip(field, request):
    f = request.getfixturevalue(field)
    g = CoefficientField.from_json(f.to_json())
    x = np.linspace(-7, 7, 57)
    assert np.array_equal(f.c(x), g.c(x)) and np.array_equal(f.a(x), g.a(x))
    assert json.loads(g.to_json()) == json.loads(f.to_json())


def test_shifted_field(per):
    g = per.shifted(5.0)
    x = np.linspace(0, 1, 11)
    assert np.allclose(g.c(x), per.c(x) + 5.0) and np.array_equal(g.a(x), per.a(x))


def test_grid_alignment():
    g = Grid1D.aligned(-1.02, 3.0, 0.05)
    assert g.x[g.index_of(0.0)] == pytest.approx(0.0, abs=1e-12)
    assert g.h == pytest.approx(0.05)
    with pytest.raises(ArgumentError):
        Grid1D(0.0, 1.0, 1)


def test_bohr_mean_quasi_closed_form():
    # mean of cos x + cos sqrt2 x is 0; window average is exact via the antiderivative
    f = TrigPoly(0.0, (1.0, 1.0), (1.0, SQ2), (0.0, 0.0))
    T = 1e4
    bm = bohr_mean(f, T, [0.0, 1e4, 1e5])
    exact = [(f.antiderivative(s + T) - f.antiderivative(s)) / T for s in (0.0, 1e4, 1e5)]
    assert np.allclose(bm.window_means, exact, atol=1e-9)
    assert abs(bm.value) < 1e-3
    assert bm.uncertainty <= 2.0 * (1 + 1 / SQ2) / T + 1e-12


def test_bohr_mean_periodic_example():
    f = TrigPoly(1.0, (0.5,), (2 * math.pi,), (0.0,))
    bm = bohr_mean(f, 10.0, [0.0, 3.3])
    assert bm.value == pytest.approx(1.0, abs=1e-10)


def test_bohr_mean_argument_errors():
    with pytest.raises(ArgumentError):
        bohr_mean(np.cos, 0.0, [0.0])
    with pytest.raises(ArgumentError):
        bohr_mean(np.cos, 1.0, [])
    with pytest.raises(ArgumentError):
        spread_offsets(0.0, 1.0, 2.0)


freq = st.floats(0.1, 5.0)
amp = st.floats(-2.0, 2.0)


@settings(max_examples=25, deadline=None)
@given(amp, amp, freq, freq, st.floats(-3, 3), st.floats(-3, 3))
def test_bohr_mean_linearity(a1, a2, w1, w2, m1, m2):
    f = TrigPoly(m1, (a1,), (w1,), (0.0,))
    g = TrigPoly(m2, (a2,), (w2,), (0.0,))
    off = [0.0, 77.0]
    lhs = bohr_mean(lambda x: 2.0 * f(x) - 3.0 * g(x), 200.0, off)
    rhs = 2.0 * bohr_mean(f, 200.0, off).value - 3.0 * bohr_mean(g, 200.0, off).value
    assert lhs.value == pytest.approx(rhs, abs=1e-9)


@settings(max_examples=25, deadline=None)
@given(amp, freq, st.floats(-3, 3))
def test_bohr_mean_of_derivative_vanishes(a1, w1, m1):
    # telescoping: window mean of F' is (F(s+T) - F(s))/T, bounded by 2 sup|F| / T
    f = TrigPoly(m1, (a1,), (w1,), (0.0,))
    T = 500.0
    bm = bohr_mean(f.derivative, T, [0.0, 123.0])
    assert abs(bm.value) <= 2 * abs(a1) / T + 1e-8


@settings(max_examples=15, deadline=None)
@given(st.integers(1, 50), st.floats(0.05, 2.0))
def test_ap_periodic_multiples(k, a1):
    # every integer multiple of the period is an almost period
    f = TrigPoly(1.0, (a1,), (2 * math.pi,), (0.0,))
    rep = ap_diagnostic(f, 1e-6, (0, 60), (0, 2))
    assert all(abs(t - round(t)) < 1e-9 for t in rep.almost_periods)
    assert float(k) in [round(t, 9) for t in rep.almost_periods]


def test_ap_diagnostic_quasi_brute_force():
    f = TrigPoly(1.0, (0.1, 0.1), (1.0, SQ2), (0.0, 0.0))
    rep = ap_diagnostic(f, 0.05, (0, 500), (0, 100))
    assert rep.almost_periods and rep.max_gap < 500
    # brute-force oracle on the same lattice
    xs = 0.01 * np.arange(0, 60001)
    v = f(xs)
    found = [k * 0.01 for k in range(0, 50001)
             if np.max(np.abs(v[k:k + 10001] - v[:10001])) <= 0.05]
    assert np.allclose(rep.almost_periods, found)


def test_sample_ap_diagnostic_finds_period():
    h = 0.01
    v = np.sin(2 * math.pi * h * np.arange(3000))
    rep = sample_ap_diagnostic(v, h, 1e-9, 5.0)
    assert np.allclose(rep.almost_periods, [1.0, 2.0, 3.0, 4.0, 5.0])


def test_bohr_mean_samples_matches_function():
    x = 0.01 * np.arange(100001)
    f = TrigPoly(0.3, (1.0,), (1.0,), (0.0,))
    a = bohr_mean_samples(x, f(x), 500.0, [0.0, 400.0])
    b = bohr_mean(f, 500.0, [0.0, 400.0])
    assert a.value == pytest.approx(b.value, abs=1e-6)


def test_wrap_length(per, qp):
    n, d = wrap_length(per, 100.0, 0.05)
    assert n == 2000 and d == 0.0
    n, d = wrap_length(qp, 200.0, 0.05)
    assert 200.0 <= n * 0.05 <= 600.0
    assert d < 0.05
