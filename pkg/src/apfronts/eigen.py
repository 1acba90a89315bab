"""Principal eigenvalues: expanding Dirichlet intervals, tilted eigenvalues k_p,
and a shooting diagnostic for bounded positive eigenfunctions."""

import csv
import functools
import math
from dataclasses import dataclass, field as dc_field

import numpy as np

from . import _kernels
from .coeff import CoefficientField, Grid1D, wrap_length
from .errors import ArgumentError, ConvergenceError, SolverError

DEFAULT_H = 0.05
DEFAULT_R_SCHEDULE = tuple(float(v) for v in np.round(np.geomspace(25.0, 1600.0, 19), 2))
DEFAULT_REG_SCHEDULE = (1.0, 0.3, 0.1, 0.03, 0.01)


def _operator_tridiag(field, x, h):
    """Diagonal and off-diagonal of phi -> (a phi')' + c phi on interior nodes x[1:-1]."""
    ah = field.a_half(x, h)
    c = field.c(x[1:-1])
    h2 = h * h
    d = c - (ah[:-1] + ah[1:]) / h2
    e = ah[1:-1] / h2
    return d, e


def dirichlet_eigenpair(field, interval, grid):
    """Largest eigenvalue and positive eigenvector (max 1) with Dirichlet ends.

    The discrete problem lives on the nodes of ``grid`` inside ``interval``;
    both interval ends must be grid nodes.  Returns (lam, phi) where phi
    includes the two zero end values.
    """
    lo, hi = interval
    if not hi > lo:
        raise ArgumentError("interval length must be positive")
    h = grid.h
    x = grid.x
    sel = (x >= lo - 1e-9 * h) & (x <= hi + 1e-9 * h)
    xs = x[sel]
    if xs.size < 10:
        raise ArgumentError("grid too coarse: fewer than 10 nodes on the interval", n=int(xs.size))
    if abs(xs[0] - lo) > 1e-6 * h or abs(xs[-1] - hi) > 1e-6 * h:
        raise ArgumentError("interval ends must coincide with grid nodes")
    d, e = _operator_tridiag(field, xs, h)
    lam_lo, lam_hi = _kernels.max_eig(d, e)
    lam = 0.5 * (lam_lo + lam_hi)
    # inverse iteration just above the spectrum: T - s I is negative definite
    s = lam_hi + 1e-9 * max(1.0, abs(lam_hi))
    m = d.size
    lower = np.concatenate(([0.0], e))
    upper = np.concatenate((e, [0.0]))
    v = np.ones(m)
    for _ in range(4):
        v = _kernels.thomas(lower, d - s, upper, v)
        v = v / np.max(np.abs(v))
    v = np.abs(v)
    phi = np.concatenate(([0.0], v / v.max(), [0.0]))
    return float(lam), phi


@dataclass
class EigenEstimate:
    samples: list
    lambda1: float
    tol: float
    eigenfunction: np.ndarray
    h: float = DEFAULT_H
    x: np.ndarray = None
    monotone: bool = True

    def to_dict(self):
        return {"lambda1": self.lambda1, "tol": self.tol, "h": self.h, "monotone": self.monotone,
                "samples": [[R, lam] for R, lam in self.samples]}


def lambda1(field, R_schedule=DEFAULT_R_SCHEDULE, tol=1e-4, h=DEFAULT_H):
    """Generalized principal eigenvalue from Dirichlet problems on (0, R).

    Grids share the spacing h, so successive discrete problems are nested
    and the table is monotone.  Convergence is declared at the first
    increment below tol; the reported tolerance also covers the 1/R^2 tail
    estimated from the last increment.
    """
    R_schedule = [float(R) for R in R_schedule]
    if len(R_schedule) < 3:
        raise ArgumentError("R_schedule needs at least 3 entries")
    if tol <= 0:
        raise ArgumentError("tol must be positive")
    if any(b <= a for a, b in zip(R_schedule, R_schedule[1:])):
        raise ArgumentError("R_schedule must be increasing")
    samples = []
    phi = x = None
    for k, R in enumerate(R_schedule):
        grid = Grid1D.aligned(0.0, R, h)
        lam, phi = dirichlet_eigenpair(field, (grid.x_lo, grid.x_hi), grid)
        x = grid.x
        samples.append((grid.x_hi, lam))
        if k == 0:
            continue
        inc = samples[-1][1] - samples[-2][1]
        if abs(inc) < tol and k >= 2:
            rho = samples[-1][0] / samples[-2][0]
            tail = abs(inc) / (rho * rho - 1.0)
            lams = [s[1] for s in samples]
            mono = all(b >= a - 10 * h * h for a, b in zip(lams, lams[1:]))
            return EigenEstimate(samples, lam + 0.5 * inc, max(tol, tail), phi, h, x, mono)
    raise ConvergenceError("lambda1 did not converge over the R schedule",
                           table=[list(s) for s in samples])


@functools.lru_cache(maxsize=64)
def _lambda1_cached(field, h, R_schedule, tol):
    return lambda1(field, R_schedule, tol, h)


def lambda1_cached(field, h=DEFAULT_H, R_schedule=DEFAULT_R_SCHEDULE, tol=1e-4):
    """lambda1 memoized per (field, h, schedule, tol)."""
    return _lambda1_cached(field, float(h), tuple(float(r) for r in R_schedule), float(tol))


def rayleigh_quotient(field, test_fn, interval):
    """int (c phi^2 - a phi'^2) / int phi^2 for samples on a uniform grid.

    phi' is the centered difference at cell midpoints, a is taken there;
    end values must vanish.  ``test_fn`` may also be a callable, sampled
    on 2001 points.
    """
    lo, hi = interval
    if callable(test_fn):
        xs = np.linspace(lo, hi, 2001)
        phi = np.asarray(test_fn(xs), dtype=float)
    else:
        phi = np.asarray(test_fn, dtype=float)
        xs = np.linspace(lo, hi, phi.size)
    if phi.size < 3:
        raise ArgumentError("test function needs at least 3 samples")
    scale = np.max(np.abs(phi))
    if scale == 0:
        raise ArgumentError("test function is identically zero")
    if abs(phi[0]) > 1e-8 * scale or abs(phi[-1]) > 1e-8 * scale:
        raise ArgumentError("test function must vanish at the interval ends")
    h = xs[1] - xs[0]
    ah = field.a(0.5 * (xs[1:] + xs[:-1]))
    dphi = np.diff(phi) / h
    num = np.sum(field.c(xs) * phi**2) * h - np.sum(ah * dphi**2) * h
    den = np.sum(phi**2) * h
    return float(num / den)


# ---------------------------------------------------------------------------
# Tilted eigenvalues through the regularized log equation
#   a u'' + a u'^2 + b u' + ct = eps u,   b = a' - 2 a p,  ct = a p^2 - a' p + c.
# theta = e^u solves L_p theta = eps u theta, hence inf eps u <= k_p <= sup eps u.


def tilted_coefficients(field, p, x):
    a = field.a(x)
    ap = field.a_prime(x)
    return a, ap - 2.0 * a * p, a * p * p - ap * p + field.c(x)


def _residual(u, a, b, ct, eps, h):
    up = np.roll(u, -1)
    um = np.roll(u, 1)
    d1 = (up - um) / (2 * h)
    d2 = (up - 2 * u + um) / (h * h)
    return a * d2 + a * d1 * d1 + b * d1 + ct - eps * u, d1


def solve_regularized(a, b, ct, eps, h, u0, tol=1e-10, maxit=60):
    """Damped Newton for the periodic regularized equation; returns (u, history)."""
    u = np.array(u0, dtype=float)
    F, d1 = _residual(u, a, b, ct, eps, h)
    hist = [float(np.max(np.abs(F)))]
    scale = max(1.0, float(np.max(np.abs(ct))))
    for _ in range(maxit):
        if hist[-1] <= tol * scale:
            return u, hist
        g = 2 * a * d1 + b
        diag = -2 * a / (h * h) - eps
        lower = a / (h * h) - g / (2 * h)
        upper = a / (h * h) + g / (2 * h)
        du = _kernels.cyclic_thomas(lower, diag, upper, -F)
        step = 1.0
        for _ in range(30):
            un = u + step * du
            Fn, d1n = _residual(un, a, b, ct, eps, h)
            rn = float(np.max(np.abs(Fn)))
            if rn < hist[-1] or step < 1e-6:
                break
            step *= 0.5
        u, F, d1 = un, Fn, d1n
        hist.append(rn)
    if hist[-1] <= 1e3 * tol * scale:
        return u, hist
    raise SolverError("Newton iteration for the regularized equation did not converge",
                      residual_history=hist)


@dataclass
class KpResult:
    p: float
    k_p: float
    bracket: tuple
    trace: list
    wrap_nodes: int
    wrap_defect: float
    u: np.ndarray = None
    h: float = DEFAULT_H

    @property
    def uncertainty(self):
        return 0.5 * (self.bracket[1] - self.bracket[0])


def _wrap(field, length, h):
    n, defect = wrap_length(field, length, h)
    return n, defect


def k_p(field, p, domain_half_length=100.0, reg_schedule=DEFAULT_REG_SCHEDULE, h=DEFAULT_H,
        return_result=False):
    """Tilted principal eigenvalue k_p; returns (k_p, trace) or a KpResult.

    The regularized equation is posed with periodic ends on a domain whose
    length (at least 2 * domain_half_length) is an almost-period of the
    coefficients, so no artificial boundary layer enters the bracket.
    trace is a list of (eps_reg, sup|eps_reg u - k_p|, newton residual).
    """
    if domain_half_length <= 0:
        raise ArgumentError("domain_half_length must be positive")
    reg_schedule = [float(e) for e in reg_schedule]
    if not reg_schedule or any(e <= 0 for e in reg_schedule):
        raise ArgumentError("regularization values must be positive")
    n, defect = _wrap(field, 2.0 * domain_half_length, h)
    x = h * np.arange(n)
    a, b, ct = tilted_coefficients(field, p, x)
    lo, hi = -math.inf, math.inf
    sols = []
    u = np.full(n, float(np.mean(ct)) / reg_schedule[0])
    prev_eps = reg_schedule[0]
    for eps in reg_schedule:
        if sols:
            m = float(np.mean(u))
            u = prev_eps * m / eps + (u - m)
        u, hist = solve_regularized(a, b, ct, eps, h, u)
        ev = eps * u
        lo, hi = max(lo, float(ev.min())), min(hi, float(ev.max()))
        sols.append((eps, ev, hist[-1]))
        prev_eps = eps
    if lo > hi:
        # brackets must intersect up to discretization error; keep the last one
        lo, hi = float(sols[-1][1].min()), float(sols[-1][1].max())
    kp = 0.5 * (lo + hi)
    trace = [(eps, float(np.max(np.abs(ev - kp))), res) for eps, ev, res in sols]
    res = KpResult(float(p), kp, (lo, hi), trace, n, defect, u, h)
    if return_result:
        return res
    return kp, trace


@dataclass
class KpCurve:
    entries: list
    lambda1_ref: float = None
    flags: list = dc_field(default_factory=list)

    @property
    def p(self):
        return np.array([e[0] for e in self.entries])

    @property
    def k(self):
        return np.array([e[1] for e in self.entries])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["p", "k_p", "eps_reg_final", "residual"])
            for p, kp, trace in self.entries:
                eps, resid, _ = trace[-1]
                w.writerow([repr(float(p)), repr(float(kp)), repr(float(eps)), repr(float(resid))])


def kp_curve(field, ps, lambda1_ref=None, tol=1e-3, **kw):
    """k_p on a p grid with the lower-bound and convexity checks as flags."""
    entries = []
    for p in ps:
        kp, trace = k_p(field, p, **kw)
        entries.append((float(p), kp, trace))
    curve = KpCurve(entries, lambda1_ref)
    k = curve.k
    if lambda1_ref is not None:
        for p, kp, _ in entries:
            if kp < lambda1_ref - tol:
                curve.flags.append({"check": "k_p >= lambda1", "p": p, "k_p": kp})
    pp = curve.p
    for i in range(1, len(pp) - 1):
        # convexity on a possibly nonuniform grid
        w = (pp[i] - pp[i - 1]) / (pp[i + 1] - pp[i - 1])
        interp = (1 - w) * k[i - 1] + w * k[i + 1]
        if k[i] > interp + tol:
            curve.flags.append({"check": "convexity", "p": float(pp[i]), "excess": float(k[i] - interp)})
    return curve


# ---------------------------------------------------------------------------


@dataclass
class Hyp1Report:
    lambda_used: float
    phi_samples: np.ndarray
    x: np.ndarray
    ratio: float
    bounded_verdict: str
    slope: float = 0.0

    def to_dict(self):
        return {"lambda_used": self.lambda_used, "ratio": self.ratio,
                "bounded_verdict": self.bounded_verdict, "slope": self.slope}


def _half_shoot(field, lam, L, h, s, side):
    n = int(round(L / h)) + 1
    x = side * h * np.arange(n)
    if side > 0:
        ah = field.a(x[:-1] + 0.5 * h)
    else:
        ah = field.a(x[:-1] - 0.5 * h)
    # phi'(0) = s to second order: use the centered guess for phi(+-h)
    r0 = 1.0 + side * s * h
    return _kernels.shoot(ah, field.c(x), lam, h * h, r0)


def _shoot_both(field, lam, L, h, s):
    lr, br = _half_shoot(field, lam, L, h, s, 1)
    ll, bl = _half_shoot(field, lam, L, h, s, -1)
    return lr, br, ll, bl


def _best_slope(field, lam, L, h, s_max=10.0, iters=60):
    lo, hi = -s_max, s_max
    best = None
    for _ in range(iters):
        s = 0.5 * (lo + hi)
        lr, br, ll, bl = _shoot_both(field, lam, L, h, s)
        if br >= 0 and bl >= 0:
            # both sides fail: the side failing first gets the push
            raise_s = br < bl
        elif br >= 0:
            raise_s = True
        elif bl >= 0:
            raise_s = False
        else:
            best = s
            raise_s = lr[-1] < ll[-1]
        if raise_s:
            lo = s
        else:
            hi = s
    s = best if best is not None else 0.5 * (lo + hi)
    lr, br, ll, bl = _shoot_both(field, lam, L, h, s)
    ok = br < 0 and bl < 0
    lphi = np.concatenate((ll[:0:-1], lr))
    return s, ok, lphi


def hyp1_diagnostic(field, lambda1, L=200.0, h=DEFAULT_H):
    """Look for a bounded positive solution of (a phi')' + c phi = lam phi on [-L, L].

    For lam near lambda1 the slope phi'(0) is bisected so neither end drops
    first; lam itself is scanned on a ladder around lambda1 and refined by
    golden section on sup/inf, which is smallest near the true eigenvalue.
    """
    steps = [0.0] + [sgn * 1e-5 * 2**k for k in range(11) for sgn in (1, -1)]
    lams = sorted(lambda1 + d for d in steps)

    def evaluate(lam):
        s, ok, lphi = _best_slope(field, lam, L, h)
        if not ok:
            return math.inf, s, lphi
        return float(np.max(lphi) - np.min(lphi)), s, lphi

    results = {lam: evaluate(lam) for lam in lams}
    best = min(lams, key=lambda v: results[v][0])
    if math.isfinite(results[best][0]):
        i = lams.index(best)
        a_, b_ = lams[max(i - 1, 0)], lams[min(i + 1, len(lams) - 1)]
        gr = (math.sqrt(5) - 1) / 2
        c_, d_ = b_ - gr * (b_ - a_), a_ + gr * (b_ - a_)
        fc, fd = evaluate(c_)[0], evaluate(d_)[0]
        for _ in range(25):
            if fc < fd:
                b_, d_, fd = d_, c_, fc
                c_ = b_ - gr * (b_ - a_)
                fc = evaluate(c_)[0]
            else:
                a_, c_, fc = c_, d_, fd
                d_ = a_ + gr * (b_ - a_)
                fd = evaluate(d_)[0]
        for lam in (c_, d_):
            if lam not in results:
                results[lam] = evaluate(lam)
        best = min(results, key=lambda v: results[v][0])
    logratio, s, lphi = results[best]
    n = int(round(L / h))
    x = h * np.arange(-n, n + 1)
    if math.isfinite(logratio):
        phi = np.exp(lphi - lphi[n])
        ratio = float(math.exp(logratio))
        if ratio < 100.0:
            verdict = "plausible"
        elif max(phi[0], phi[-1]) < 1e-6 * phi.max() or min(phi[0], phi[-1]) < 1e-6 * phi.max():
            verdict = "localized"
        else:
            verdict = "inconclusive"
        return Hyp1Report(float(best), phi, x, ratio, verdict, float(s))
    # no positive solution on the window at any tried lam
    good = np.isfinite(lphi)
    phi = np.where(good, np.exp(np.where(good, lphi, 0.0)), np.nan)
    return Hyp1Report(float(best), phi, x, math.inf, "inconclusive", float(s))
