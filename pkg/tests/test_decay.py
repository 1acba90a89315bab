import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from apfronts.coeff import CoefficientField, sample_ap_diagnostic
from apfronts.decay import (default_gamma_grid, fit_mu_lower, lower_bound, lower_bound_tol, mu, mu_curve, phi_gamma,
                            sigma_bound_constant_c)
from apfronts.eigen import lambda1_cached
from apfronts.errors import ArgumentError

from conftest import constant_field, floquet_mu, periodic_a_field, rel


def test_phi_constant_is_exponential(const):
    prof = phi_gamma(const, 2.0, h=1e-3, L_left=10.0)
    x = prof.x
    sel = (x >= 0) & (x <= 20)
    assert np.max(np.abs(np.expm1(prof.lphi[sel] + x[sel]))) < 1e-5
    assert prof.lphi[prof.i0] == 0.0


@pytest.mark.parametrize("a,c,gamma,expected", [(1, 1, 2, 1.0), (4, 1, 2, 0.5), (1, 4, 5, 1.0), (2, 0.5, 1, 0.5)])
def test_mu_constant_closed_form(a, c, gamma, expected):
    m = mu(constant_field(a, c), gamma)
    assert m.value == pytest.approx(expected, rel=2e-4)


@settings(max_examples=10, deadline=None)
@given(st.floats(0.3, 4.0), st.floats(0.3, 4.0), st.floats(0.05, 5.0))
def test_mu_constant_property(a, c, d):
    f = constant_field(a, c)
    m = mu(f, c + d, lambda1=c, lambda_tol=1e-6)
    assert m.value == pytest.approx(math.sqrt(d / a), rel=1e-3)


@pytest.mark.parametrize("gamma", [1.2, 2.0, 4.0])
def test_mu_periodic_floquet(per, gamma):
    m = mu(per, gamma)
    assert abs(m.value - floquet_mu(per, gamma, 1.0)) <= 1e-3 * m.value


@pytest.mark.parametrize("gamma", [1.2, 2.0])
def test_mu_periodic_a_floquet(gamma):
    f = periodic_a_field()
    assert rel(mu(f, gamma).value, floquet_mu(f, gamma, 1.0)) < 1e-3


def test_phi_rejects_gamma_below_threshold(per):
    est = lambda1_cached(per)
    with pytest.raises(ArgumentError):
        phi_gamma(per, est.lambda1)


def test_riccati_identity(per):
    # phi'/phi = -sigma turns (a phi')' = (gamma - c) phi into -(a sigma)' + a sigma^2 = gamma - c
    gamma = 2.0
    prof = phi_gamma(per, gamma, h=0.01)
    x, s = prof.x, prof.sigma
    lo, hi = prof.mean_range
    sel = np.nonzero((x > lo) & (x < hi))[0]
    a = per.a(x)
    lhs = -(a[sel + 1] * s[sel + 1] - a[sel - 1] * s[sel - 1]) / (2 * 0.01) + a[sel] * s[sel] ** 2
    assert np.max(np.abs(lhs - (gamma - per.c(x[sel])))) < 1e-3


def test_sigma_is_almost_periodic(per):
    prof = phi_gamma(per, 2.0)
    lo, hi = prof.mean_range
    sel = (prof.x >= lo) & (prof.x <= hi)
    rep = sample_ap_diagnostic(prof.sigma[sel], prof.grid.h, 1e-6, 3.0)
    assert np.allclose(rep.almost_periods, [1.0, 2.0, 3.0])


def test_two_sided_means_and_regression(qp):
    prof = phi_gamma(qp, 2.0)
    left, right = prof.two_sided_means()
    assert abs(left.value - right.value) <= 1e-3 * prof.mu.value
    assert rel(prof.mu_regression, prof.mu.value) < 1e-2
    assert all(s[1] and min(s[1]) > -1e-9 for s in prof.monotone_table)


def test_sigma_bound_constant_c():
    f = periodic_a_field()
    for gamma in (1.5, 3.0):
        prof = phi_gamma(f, gamma)
        # the Dirichlet layer at R is not part of the decaying solution
        lo, hi = prof.mean_range
        s = prof.sigma[(prof.x >= lo) & (prof.x <= hi)]
        assert np.max(np.abs(s)) <= sigma_bound_constant_c(f, gamma)


@pytest.mark.parametrize("gamma,c0", [(1.5, 1.0), (2.0, 5.0), (3.0, 20.0)])
def test_shift_identity(per, gamma, c0):
    base = phi_gamma(per, gamma)
    shifted = phi_gamma(per.shifted(c0), gamma + c0, R=base.R_used, L_left=base.grid.x_hi - base.grid.x_lo - base.R_used)
    assert abs(shifted.mu.value - base.mu.value) <= base.mu.uncertainty + shifted.mu.uncertainty + 1e-12


def test_mu_curve_structure(qp):
    curve = mu_curve(qp)
    assert curve.flags == []
    m = curve.values
    assert np.all(np.diff(m) > 0)
    est = lambda1_cached(qp)
    tols = [lower_bound_tol(g, est.lambda1, est.tol, 1.0, u, 0.05)
            for g, u in zip(curve.gammas, curve.uncertainties)]
    assert np.all(m >= np.array(curve.lo_bounds) - np.array(tols))
    lo, hi = curve.mu_lower_interval()
    assert lo <= 0.0 <= hi


def test_mu_curve_lower_bound_variable_a():
    f = periodic_a_field()
    curve = mu_curve(f)
    assert not [fl for fl in curve.flags if fl["check"] == "lower_bound"]


def test_fit_mu_lower_exact_sqrt():
    g = np.array([1.1, 1.2, 1.5])
    m0, unc, beta = fit_mu_lower(g, np.sqrt(g - 1.0), np.zeros(3), 1.0, 0.0)
    assert abs(m0) < 1e-12 and beta == pytest.approx(1.0)


def test_default_gamma_grid_is_admissible():
    g = default_gamma_grid(1.0, 1e-3)
    assert min(g) > 1.0 + 1e-3 and g == sorted(g)
    assert lower_bound(2.0, 1.0, 4.0) == pytest.approx(0.5)


def test_mu_curve_needs_three_points(const):
    with pytest.raises(ArgumentError):
        mu_curve(const, gamma_grid=[1.5, 2.0])
