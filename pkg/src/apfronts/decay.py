"""Decaying solutions phi_gamma of (a phi')' + (c - gamma) phi = 0 and the
decay exponent mu(gamma) as the Bohr mean of sigma = -phi'/phi."""

import csv
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .coeff import BohrMean, Grid1D, bohr_mean_samples, spread_offsets
from .eigen import DEFAULT_H, lambda1_cached
from .errors import ArgumentError, DiscretizationError

TAIL_FLOOR = 1e-10


def default_margin(lambda_tol):
    return max(1e-3, 3.0 * lambda_tol)


@dataclass
class DecayProfile:
    """phi on an h-aligned grid from -L_left to R_used; x = 0 is node i0.

    sigma is nan at the two left-most and two right-most nodes and wherever
    phi has underflowed.
    """

    gamma: float
    grid: Grid1D
    phi: np.ndarray
    sigma: np.ndarray
    mu: BohrMean
    R_used: float
    monotone_table: list
    lphi: np.ndarray = None
    i0: int = 0
    mean_range: tuple = None
    mu_regression: float = None
    lambda1_ref: float = None

    @property
    def x(self):
        return self.grid.x

    def log_phi_at(self, x):
        return np.interp(x, self.grid.x, self.lphi)

    def two_sided_means(self):
        """Bohr means of sigma over the left and right halves of the mean range."""
        lo, hi = self.mean_range
        mid = 0.5 * (lo + hi)
        out = []
        for a, b in ((lo, mid), (mid, hi)):
            T = 0.5 * (b - a)
            out.append(bohr_mean_samples(self.grid.x, _filled(self.sigma), T, spread_offsets(a, b, T)))
        return out


def _filled(s):
    return np.where(np.isfinite(s), s, 0.0)


def _sweep(field, gamma, x, h):
    """log phi on nodes x with phi(x[-1]) = 0, normalized so phi(0) = 1."""
    ah = field.a_half(x, h)
    r, bad = _kernels.ratio_sweep(ah, field.c(x), gamma, h * h)
    if bad >= 0:
        raise DiscretizationError("phi_gamma lost positivity; refine the grid or raise gamma",
                                  x=float(x[bad]), gamma=gamma)
    with np.errstate(divide="ignore"):
        lr = np.log(r)
    lphi = np.concatenate(([0.0], np.cumsum(lr)))
    return lphi, lr


def _solve_on(field, gamma, L_left, R, h):
    grid = Grid1D.aligned(-L_left, R, h)
    x = grid.x
    lphi, lr = _sweep(field, gamma, x, h)
    i0 = grid.index_of(0.0)
    lphi = lphi - lphi[i0]
    return grid, lphi, lr, i0


def phi_gamma(field, gamma, R=None, h=DEFAULT_H, L_left=None, lambda1=None, lambda_tol=None,
              margin=None, ladder=(1.25, 1.5), max_extend=12):
    """Decaying solution with phi(0) = 1 through the Dirichlet problem on (0, R).

    The tridiagonal system is solved by a right-to-left ratio sweep (the
    stable direction for the recessive solution) over [-L_left, R]; the
    part left of 0 is the continuation of the same Cauchy data.  R is
    extended until phi(R/2) < 1e-8.  The monotone table compares phi^R
    with phi^R' for R' in ladder * R at probe points.
    """
    if lambda1 is None:
        est = lambda1_cached(field, h)
        lambda1, lambda_tol = est.lambda1, est.tol
    if lambda_tol is None:
        lambda_tol = 1e-4
    if margin is None:
        margin = default_margin(lambda_tol)
    if not gamma > lambda1 + margin:
        raise ArgumentError(f"gamma={gamma} must exceed lambda1 + margin = {lambda1 + margin}",
                            lambda1=lambda1, margin=margin)
    amax = field.a_bounds()[1]
    mu_lb = math.sqrt((gamma - lambda1) / amax)
    if R is None:
        R = 2.0 * (math.log(1e8) + 2.0) / mu_lb
    if L_left is None:
        L_left = max(R, 1000.0)
    for _ in range(max_extend):
        grid, lphi, lr, i0 = _solve_on(field, gamma, L_left, R, h)
        ihalf = grid.index_of(0.5 * grid.x_hi)
        if lphi[ihalf] < math.log(1e-8):
            break
        R *= 1.5
    else:
        raise DiscretizationError("phi_gamma(R/2) stayed above 1e-8 while extending R", R=R)
    R = grid.x_hi
    x = grid.x
    n = x.size

    # sigma at node i from the two adjacent log ratios
    sigma = np.full(n, np.nan)
    sigma[1:-2] = -(lr[1:-1] + lr[:-2]) / (2 * h)
    sigma[~np.isfinite(sigma)] = np.nan

    # monotone convergence in R at probe points
    probes = np.linspace(0.0, 0.5 * R, 6)[1:]
    ip = [grid.index_of(p) for p in probes]
    table = []
    base = lphi[ip]
    for f in ladder:
        g2, lp2, _, i02 = _solve_on(field, gamma, 0.0, f * R, h)
        other = lp2[[i02 + grid.index_of(p) - i0 for p in probes]]
        # phi^{R'} >= phi^R at each probe (both normalized at 0)
        rel = np.expm1(other - base)
        table.append((float(g2.x_hi), rel.tolist()))

    # mean region: drop boundary layers and the underflow tail
    bl = max(10.0, 0.1 * R)
    lo = x[0] + bl
    tail = np.nonzero(lphi < math.log(TAIL_FLOOR))[0]
    hi = min(R - bl, x[tail[0]] if tail.size else R)
    if hi - lo < 4 * h:
        raise DiscretizationError("no usable window for the mean of sigma", lo=lo, hi=hi)
    T = 0.5 * (hi - lo)
    mu = bohr_mean_samples(x, _filled(sigma), T, spread_offsets(lo, hi, T))
    # log-slope regression as a cross-check on [0, hi]
    sel = (x >= 0.0) & (x <= hi)
    slope = np.polyfit(x[sel], lphi[sel], 1)[0] if sel.sum() > 2 else math.nan
    with np.errstate(over="ignore"):
        phi = np.exp(lphi)  # may overflow far left; lphi is authoritative
    return DecayProfile(float(gamma), grid, phi, sigma, mu, float(R), table,
                        lphi, i0, (float(lo), float(hi)), float(-slope), float(lambda1))


def mu(field, gamma, h=DEFAULT_H, rel_unc=0.01, **kw):
    """Decay exponent as a BohrMean; one automatic domain extension if the
    spread across windows exceeds rel_unc of the value."""
    prof = phi_gamma(field, gamma, h=h, **kw)
    if prof.mu.uncertainty >= rel_unc * abs(prof.mu.value):
        kw = dict(kw)
        kw["R"] = 2.0 * prof.R_used
        kw["L_left"] = 2.0 * max(prof.R_used, kw.get("L_left") or 1000.0)
        prof = phi_gamma(field, gamma, h=h, **kw)
    return prof.mu


@dataclass
class MuCurve:
    points: list
    lambda1_ref: float
    mu_lower_limit: tuple
    lambda_tol: float = 0.0
    C_envelope: float = math.nan
    flags: list = dc_field(default_factory=list)
    lo_bounds: list = dc_field(default_factory=list)
    up_bounds: list = dc_field(default_factory=list)
    amax: float = 1.0

    @property
    def gammas(self):
        return np.array([g for g, _ in self.points])

    @property
    def values(self):
        return np.array([m.value for _, m in self.points])

    @property
    def uncertainties(self):
        return np.array([m.uncertainty for _, m in self.points])

    def mu_lower_interval(self):
        m, u = self.mu_lower_limit
        return m - u, m + u

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["gamma", "mu", "mu_uncertainty", "lo_bound", "up_bound", "flags"])
            for k, (g, m) in enumerate(self.points):
                fl = ";".join(f["check"] for f in self.flags if f.get("index") == k)
                w.writerow([repr(float(g)), repr(float(m.value)), repr(float(m.uncertainty)),
                            repr(float(self.lo_bounds[k])), repr(float(self.up_bounds[k])), fl])


def lower_bound(gamma, lambda1, amax):
    """sqrt((gamma - lambda1) / sup a), the exact decay rate for constant fields."""
    return math.sqrt(max(gamma - lambda1, 0.0) / amax)


def lower_bound_tol(gamma, lambda1, lambda_tol, amax, mu_unc, h):
    """Slack for the lower bound: lambda1 uncertainty, mean spread and O(h^2)."""
    lb = lower_bound(gamma, lambda1, amax)
    dl = lower_bound(gamma, lambda1 - lambda_tol, amax) - lb
    return dl + 3.0 * mu_unc + lb * (lb * h) ** 2 / 12.0 + 1e-12


def fit_mu_lower(gammas, mus, uncs, lambda1, lambda_tol):
    """Fit mu = m + beta sqrt(gamma - lambda1) on the three smallest gammas.

    Returns (m, uncertainty): residual + mean spread + the shift of m when
    lambda1 moves by its tolerance.
    """
    idx = np.argsort(gammas)[:3]
    g = np.asarray(gammas)[idx]
    m_ = np.asarray(mus)[idx]

    def fit(lam):
        s = np.sqrt(np.maximum(g - lam, 0.0))
        A = np.column_stack((np.ones_like(s), s))
        coef, *_ = np.linalg.lstsq(A, m_, rcond=None)
        return coef, float(np.max(np.abs(A @ coef - m_)))

    (m0, beta), resid = fit(lambda1)
    shifts = [fit(lambda1 + d)[0][0] for d in (-lambda_tol, lambda_tol)
              if np.all(g > lambda1 + d)]
    dm = max((abs(s - m0) for s in shifts), default=0.0)
    unc = resid + float(np.max(np.asarray(uncs)[idx])) + dm
    return float(m0), float(unc), float(beta)


def default_gamma_grid(lambda1, margin, top=None, count=8):
    top = top if top is not None else lambda1 + max(4.0, 2.0 * abs(lambda1))
    near = [lambda1 + margin * k for k in (1.1, 2.0, 4.0)]
    far = list(lambda1 + np.geomspace(8 * margin, top - lambda1, count))
    return near + far


def mu_curve(field, gamma_grid=None, h=DEFAULT_H, lambda1=None, lambda_tol=None, mapper=map, **kw):
    """mu on a gamma grid with monotonicity, concavity and bound checks as flags.

    ``mapper`` (default builtin map) may fan the gamma evaluations out.
    """
    if lambda1 is None:
        est = lambda1_cached(field, h)
        lambda1, lambda_tol = est.lambda1, est.tol
    if lambda_tol is None:
        lambda_tol = 1e-4
    margin = default_margin(lambda_tol)
    if gamma_grid is None:
        gamma_grid = default_gamma_grid(lambda1, margin)
    gamma_grid = sorted(float(g) for g in gamma_grid)
    if len(gamma_grid) < 3:
        raise ArgumentError("gamma_grid needs at least 3 values")
    vals = list(mapper(lambda g: mu(field, g, h=h, lambda1=lambda1, lambda_tol=lambda_tol, **kw), gamma_grid))
    pts = list(zip(gamma_grid, vals))
    g = np.array(gamma_grid)
    m = np.array([p[1].value for p in pts])
    u = np.array([p[1].uncertainty for p in pts])
    amax = field.a_bounds()[1]
    m0, munc, _ = fit_mu_lower(g, m, u, lambda1, lambda_tol)
    C = float(np.max(m / np.sqrt(g)))
    curve = MuCurve(pts, float(lambda1), (m0, munc), float(lambda_tol), C, amax=amax)
    scale = float(np.max(np.abs(m)))
    for k in range(len(g)):
        lb = lower_bound(g[k], lambda1, amax)
        tol = lower_bound_tol(g[k], lambda1, lambda_tol, amax, u[k], h)
        curve.lo_bounds.append(lb)
        curve.up_bounds.append(C * math.sqrt(g[k]))
        if m[k] < lb - tol:
            curve.flags.append({"check": "lower_bound", "index": k, "gamma": g[k], "mu": m[k], "bound": lb})
        if m[k] <= 0:
            curve.flags.append({"check": "positivity", "index": k, "gamma": g[k], "mu": m[k]})
    for k in range(1, len(g)):
        if m[k] < m[k - 1] - (u[k] + u[k - 1]) - 1e-12 * scale:
            curve.flags.append({"check": "monotone", "index": k, "gamma": g[k]})
    for k in range(1, len(g) - 1):
        w = (g[k] - g[k - 1]) / (g[k + 1] - g[k - 1])
        interp = (1 - w) * m[k - 1] + w * m[k + 1]
        if m[k] < interp - (u[k - 1] + u[k] + u[k + 1]) - 1e-12 * scale:
            curve.flags.append({"check": "concavity", "index": k, "gamma": g[k]})
    return curve


def sigma_bound_constant_c(field, gamma):
    """Pointwise |sigma| bound sqrt(gamma - c) sup sqrt(a) / inf a for constant c."""
    c = field.c_bounds()[0]
    alo, ahi = field.a_bounds()
    return math.sqrt(gamma - c) * math.sqrt(ahi) / alo
