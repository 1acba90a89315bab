import json
import math

import numpy as np
import pytest

from apfronts.coeff import CoefficientField
from apfronts.decay import mu
from apfronts.errors import ArgumentError
from apfronts.speed import SpeedConfig, gamma_for_speed, shift_check, shift_zero_order, speed_report

from conftest import constant_field, rel

FAST = SpeedConfig(kp_check=False)


@pytest.mark.parametrize("a,c", [(1.0, 1.0), (4.0, 1.0), (1.0, 4.0), (2.0, 0.5)])
def test_w_star_constant(a, c):
    rep = speed_report(constant_field(a, c), FAST)
    assert rel(rep.w_star, 2 * math.sqrt(a * c)) < 5e-3
    assert math.isinf(rep.w_lower) and rep.window_nonempty


def test_kp_route_constant_exact():
    rep = speed_report(constant_field(1.0, 1.0), SpeedConfig(kp_doubling=False))
    assert rep.kp_cross_check["value"] == pytest.approx(2.0, abs=1e-6)
    assert rep.kp_cross_check["p_min"] == pytest.approx(1.0, rel=1e-3)


def test_dual_routes_periodic(per):
    rep = speed_report(per)
    cc = rep.kp_cross_check
    assert cc["relative_discrepancy"] < 1e-2
    assert cc["doubling_change"] < 1e-6


def test_space_scaling_oracle(per):
    # y = 2x maps (a, c(x)) to (4a, c(y/2)) and doubles every speed
    stretched = CoefficientField.periodic(2.0, a_mean=4.0, c_mean=1.0, c_terms=[(0.5, 1, -math.pi / 2)])
    w1 = speed_report(per, FAST).w_star
    w2 = speed_report(stretched, SpeedConfig(kp_check=False, h=0.1)).w_star
    assert rel(w2, 2 * w1) < 2e-3


def test_time_scaling_oracle(per):
    # (k a, k c) multiplies speeds by k
    scaled = CoefficientField.periodic(1.0, a_mean=3.0, c_mean=3.0, c_terms=[(1.5, 1, -math.pi / 2)])
    w1 = speed_report(per, FAST).w_star
    w2 = speed_report(scaled, FAST).w_star
    assert rel(w2, 3 * w1) < 2e-3


def test_w_star_between_simple_bounds(per, qp):
    # a = 1: 2 sqrt(mean c) <= w* <= 2 sqrt(lambda1) (k_p <= lambda1 + p^2 from the symmetric part)
    for f in (per, qp):
        rep = speed_report(f, FAST)
        assert 2.0 * (1 - 1e-4) <= rep.w_star <= 2 * math.sqrt(rep.lambda1 + rep.lambda_tol)
        assert rep.gamma_star > rep.lambda1


def test_gamma_for_speed_constant(const):
    rep = speed_report(const, FAST)
    g, eps = gamma_for_speed(const, 2.5, rep)
    assert g == pytest.approx(1.25, abs=1e-4)
    g2 = (1 + eps) * g
    assert g2 / mu(const, g2).value <= 2.5 - 0.05 * (2.5 - rep.w_star)
    with pytest.raises(ArgumentError):
        gamma_for_speed(const, 1.9, rep)


def test_gamma_for_speed_periodic_root(per):
    rep = speed_report(per, FAST)
    w = 1.2 * rep.w_star
    g, _ = gamma_for_speed(per, w, rep)
    assert g < rep.gamma_star
    assert rel(g / mu(per, g).value, w) < 1e-6


def test_shift_zero_order(per):
    assert shift_zero_order(per, 0) is per
    with pytest.raises(ArgumentError):
        shift_zero_order(per, -0.5)


def test_w_star_increases_with_c0(per):
    ws = [speed_report(shift_zero_order(per, c0), FAST).w_star for c0 in (0.0, 1.0, 5.0)]
    assert ws == sorted(ws)


def test_shift_check_rows(per):
    rows = shift_check(per, [1.0, 5.0], [1.5, 2.0])
    for r in rows:
        assert abs(r["lambda1_shift"] - r["c0"]) <= r["lambda_budget"]
        for p in r["mu_pairs"]:
            assert p["diff"] <= p["budget"]
        assert r["window_nonempty"]


def test_report_serialization(const):
    rep = speed_report(const, FAST)
    d = json.loads(rep.to_json())
    assert d["w_lower"] == "inf" and d["window_nonempty"] is True
    assert d["w_star"] == pytest.approx(rep.w_star)


def test_speed_config_rejects_unknown():
    with pytest.raises(ArgumentError):
        SpeedConfig.from_dict({"bogus": 1})
