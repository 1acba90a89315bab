"""Critical speed w* = inf gamma/mu(gamma), its k_p dual, and gamma selection."""

import csv
import json
import math
from dataclasses import asdict, dataclass, field as dc_field

import numpy as np
from scipy.optimize import minimize_scalar

from .decay import default_margin, mu as mu_of, mu_curve
from .eigen import DEFAULT_H, DEFAULT_R_SCHEDULE, DEFAULT_REG_SCHEDULE, k_p, lambda1_cached
from .errors import ArgumentError, RangeError

EPS_GRID = tuple(round(0.95 - 0.05 * k, 2) for k in range(19)) + (0.02, 0.01)


@dataclass
class SpeedConfig:
    h: float = DEFAULT_H
    R_schedule: tuple = DEFAULT_R_SCHEDULE
    lambda_tol: float = 1e-4
    scan_points: int = 40
    gamma_max_factor: float = 100.0
    xtol: float = 1e-6
    p_points: int = 25
    kp_half_length: float = 100.0
    reg_schedule: tuple = DEFAULT_REG_SCHEDULE
    kp_check: bool = True
    kp_doubling: bool = True

    @classmethod
    def from_dict(cls, d):
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ArgumentError(f"unknown speed settings {sorted(unknown)}")
        if "R_schedule" in d:
            d["R_schedule"] = tuple(float(v) for v in d["R_schedule"])
        if "reg_schedule" in d:
            d["reg_schedule"] = tuple(float(v) for v in d["reg_schedule"])
        return cls(**d)


@dataclass
class SpeedReport:
    lambda1: float
    lambda_tol: float
    mu_lower: tuple
    w_lower: float
    w_star: float
    w_star_unc: float
    gamma_star: float
    mu_star: float
    attained: bool
    kp_cross_check: dict = None
    diagnostics: list = dc_field(default_factory=list)
    scan: list = dc_field(default_factory=list)
    kp_scan: list = dc_field(default_factory=list)
    margin: float = 1e-3
    h: float = DEFAULT_H

    @property
    def window_nonempty(self):
        return self.w_star < self.w_lower

    def to_dict(self):
        d = asdict(self)
        d["w_lower"] = _num(self.w_lower)
        d["window_nonempty"] = self.window_nonempty
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False)

    def write_csv(self, gamma_path, p_path):
        with open(gamma_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma", "mu", "gamma_over_mu"])
            for g, m, r in self.scan:
                w.writerow([repr(g), repr(m), repr(r)])
        with open(p_path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "k_p", "k_p_over_p"])
            for p, kp, r in self.kp_scan:
                w.writerow([repr(p), repr(kp), repr(r)])


def _num(v):
    # JSON has no infinity; encode it as a string
    return "inf" if math.isinf(v) else v


def _golden(f, a, b, c, xtol):
    res = minimize_scalar(f, bracket=(a, b, c), method="golden", tol=xtol)
    return float(res.x), float(res.fun)


def _bracket_min(f, xs):
    """Evaluate f on xs (stopping once values exceed 3x the running minimum
    past the minimizer) and return (table, index of min)."""
    table = []
    best = math.inf
    for x in xs:
        v = f(x)
        table.append((float(x), v))
        best = min(best, v)
        if v > 3.0 * best and len(table) > 2:
            break
    vals = [v for _, v in table]
    return table, int(np.argmin(vals))


def speed_report(field, config=None):
    """Assemble lambda1, mu_lower, w_lower, w* (scan + golden section) and the
    min_p k_p/p cross-check."""
    cfg = config if isinstance(config, SpeedConfig) else SpeedConfig.from_dict(config)
    h = cfg.h
    est = lambda1_cached(field, h, cfg.R_schedule, cfg.lambda_tol)
    lam, ltol = est.lambda1, est.tol
    margin = default_margin(ltol)
    diags = []
    if not est.monotone:
        diags.append({"warning": "lambda1 table not monotone", "table": est.samples})

    cache = {}

    def mu_val(g):
        if g not in cache:
            cache[g] = mu_of(field, g, h=h, lambda1=lam, lambda_tol=ltol)
        return cache[g]

    def ratio(g):
        return g / mu_val(g).value

    gmax = lam + cfg.gamma_max_factor * lam
    gs = lam + np.geomspace(1.1 * margin, gmax - lam, cfg.scan_points)
    table, i = _bracket_min(ratio, gs)
    if i == len(table) - 1:
        raise RangeError("no minimum of gamma/mu(gamma) bracketed below gamma_max",
                         scan=[list(r) for r in table])
    scan = [(g, mu_val(g).value, v) for g, v in table]
    if i == 0:
        g_star, w_star = table[0]
        attained = False
        diags.append({"warning": "gamma/mu(gamma) decreasing toward lambda1; w* is an infimum estimate"})
    else:
        a, b, c = table[i - 1][0], table[i][0], table[i + 1][0]
        g_star, w_star = _golden(ratio, a, b, c, cfg.xtol)
        attained = a + cfg.xtol * b < g_star < c - cfg.xtol * b
    m_star = mu_val(g_star)
    w_unc = w_star * m_star.uncertainty / m_star.value

    curve = mu_curve(field, h=h, lambda1=lam, lambda_tol=ltol)
    for f in curve.flags:
        diags.append({"warning": "mu curve check failed", **{k: _plain(v) for k, v in f.items()}})
    m0, munc = curve.mu_lower_limit
    w_lower = math.inf if m0 - munc <= 0.0 else lam / m0
    if m0 - munc <= 0.0 < m0 + munc:
        diags.append({"note": "mu_lower interval contains 0; w_lower reported as inf"})

    rep = SpeedReport(lam, ltol, (m0, munc), w_lower, float(w_star), float(w_unc), float(g_star),
                      float(m_star.value), bool(attained), None, diags, scan, [], margin, h)
    if cfg.kp_check:
        kp_cross_check(field, rep, cfg)
    return rep


def _plain(v):
    return v.item() if hasattr(v, "item") else v


def kp_cross_check(field, rep, cfg):
    """min_p k_p/p on a geometric p grid around mu(gamma*), refined by golden section."""
    kw = dict(domain_half_length=cfg.kp_half_length, reg_schedule=cfg.reg_schedule, h=cfg.h)
    cache = {}

    def kp(p):
        if p not in cache:
            cache[p] = k_p(field, p, return_result=True, **kw)
        return cache[p]

    def ratio(p):
        return kp(p).k_p / p

    ps = np.geomspace(0.2 * rep.mu_star, 5.0 * rep.mu_star, cfg.p_points)
    vals = [ratio(p) for p in ps]
    i = int(np.argmin(vals))
    if 0 < i < len(ps) - 1:
        p_min, v_min = _golden(ratio, ps[i - 1], ps[i], ps[i + 1], cfg.xtol)
    else:
        p_min, v_min = float(ps[i]), float(vals[i])
        rep.diagnostics.append({"warning": "k_p/p minimum at the end of the p grid"})
    r = kp(p_min)
    unc = r.uncertainty / p_min
    out = {"value": v_min, "uncertainty": unc, "p_min": p_min, "k_p": r.k_p,
           "discrepancy": abs(v_min - rep.w_star), "relative_discrepancy": abs(v_min - rep.w_star) / rep.w_star,
           "wrap_length": r.wrap_nodes * cfg.h, "wrap_defect": r.wrap_defect}
    if cfg.kp_doubling:
        r2 = k_p(field, p_min, return_result=True, **dict(kw, domain_half_length=2 * cfg.kp_half_length))
        out["doubling_change"] = abs(r2.k_p - r.k_p)
    rep.kp_cross_check = out
    rep.kp_scan = [(float(p), cache[p].k_p, cache[p].k_p / p) for p in sorted(cache)]
    return out


def gamma_for_speed(field, w, report, eps_grid=EPS_GRID, margin_frac=0.05):
    """Smallest root of w mu(gamma) = gamma in (lambda1, gamma*) and the largest
    admissible epsilon with (1+eps) gamma / mu((1+eps) gamma) <= w - margin_frac (w - w*)."""
    if not report.w_star < w < report.w_lower:
        raise ArgumentError(f"speed {w} outside the admissible window ({report.w_star}, {report.w_lower})",
                            w_star=report.w_star, w_lower=_num(report.w_lower))
    lam, ltol, h = report.lambda1, report.lambda_tol, report.h

    def m(g):
        return mu_of(field, g, h=h, lambda1=lam, lambda_tol=ltol).value

    def f(g):
        return w * m(g) - g

    lo = lam + 1.1 * report.margin
    hi = report.gamma_star
    if f(lo) >= 0:
        raise ArgumentError("w mu(gamma) - gamma already nonnegative at lambda1 + margin; "
                            "w is too close to w_lower for this resolution", w=w)
    if f(hi) <= 0:
        raise ArgumentError("w mu(gamma) - gamma not positive at gamma*", w=w)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
        if hi - lo < 1e-12 * hi:
            break
    gamma = 0.5 * (lo + hi)
    target = w - margin_frac * (w - report.w_star)
    for eps in eps_grid:
        g2 = (1.0 + eps) * gamma
        if g2 / m(g2) <= target:
            return gamma, float(eps)
    raise ArgumentError("no admissible epsilon on the grid", w=w, gamma=gamma)


def shift_zero_order(field, c0):
    """The field with c replaced by c + c0."""
    cmin = field.c_bounds()[0]
    if c0 <= -cmin:
        raise ArgumentError(f"c0={c0} would make inf c nonpositive (inf c = {cmin})")
    if c0 == 0:
        return field
    return field.shifted(float(c0))


def shift_check(field, c0s, gammas, h=DEFAULT_H, config=None):
    """Companion check of the shift identities for each c0.

    Returns rows with lambda1 shift, mu_{c0}(gamma + c0) against mu(gamma),
    and the w* < w_lower flag of the shifted field.
    """
    base = lambda1_cached(field, h)
    mus = {g: mu_of(field, g, h=h) for g in gammas}
    cfg = config if isinstance(config, SpeedConfig) else SpeedConfig.from_dict(config or {"kp_check": False})
    rows = []
    for c0 in c0s:
        sf = shift_zero_order(field, c0)
        est = lambda1_cached(sf, h)
        pairs = []
        for g in gammas:
            ms = mu_of(sf, g + c0, h=h)
            m0 = mus[g]
            pairs.append({"gamma": g, "mu": m0.value, "mu_shifted": ms.value,
                          "diff": abs(ms.value - m0.value), "budget": m0.uncertainty + ms.uncertainty})
        rep = speed_report(sf, cfg)
        rows.append({"c0": c0, "lambda1": est.lambda1, "lambda1_shift": est.lambda1 - base.lambda1,
                     "lambda_budget": 2 * max(est.tol, base.tol), "mu_pairs": pairs,
                     "w_star": rep.w_star, "w_lower": _num(rep.w_lower), "window_nonempty": rep.window_nonempty})
    return rows
